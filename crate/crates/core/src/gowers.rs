//! Gowers uniformity norms U^d of Boolean functions, exact and sampled,
//! plus exact polynomial-degree computation over GF(2).
//!
//! The exact evaluator uses the recursion
//!
//! ```text
//!   U^d(f)^{2^d} = E_y [ U^{d-1}(f_y)^{2^{d-1}} ]
//! ```
//!
//! with the d = 2 base case read off the Walsh spectrum. That turns the
//! naive 2^{n(d+1)} loop for U^3 into roughly n * 2^{2n} work, which is
//! what makes exact U^3 feasible up to n around 13.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::u2_preroot_exact;
use crate::gf2::{derivative_raw, FnTable};

/// Work budget for exact norms, in table-operation units.
const MAX_EXACT_OPS: u128 = 1 << 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    Exact,
    Sampled,
}

/// Result of a norm computation. In sampled mode the standard error refers
/// to the pre-root mean, and `signed_mean` keeps the raw (possibly
/// negative) empirical mean for diagnostics; the reported value clamps it
/// at zero before taking the 2^d-th root.
#[derive(Clone, Debug, Serialize)]
pub struct GowersResult {
    pub d: u32,
    pub value: f64,
    pub mode: NormMode,
    pub samples: Option<u64>,
    pub std_error: Option<f64>,
    pub signed_mean: Option<f64>,
}

fn exact_cost(n: u32, d: u32) -> u128 {
    // d = 1 is a single scan; d >= 2 costs one transform per derivative
    // direction of the (d - 2)-fold outer loop.
    match d {
        1 => 1u128 << n,
        _ => (n as u128) << (n as u128 * (d as u128 - 1)).min(120),
    }
}

fn feasible_max_n(d: u32) -> u32 {
    (1..=crate::gf2::MAX_DIM)
        .filter(|&n| exact_cost(n, d) <= MAX_EXACT_OPS)
        .max()
        .unwrap_or(0)
}

fn check_budget(n: u32, d: u32) -> Result<()> {
    if exact_cost(n, d) > MAX_EXACT_OPS {
        return Err(Error::ResourceLimit(format!(
            "exact U^{d} at n = {n} exceeds the work budget; feasible max n is {}",
            feasible_max_n(d)
        )));
    }
    Ok(())
}

/// Exact integer numerator of U^d(f)^{2^d}; the full expectation is this
/// over 2^{n(d+1)}. Always nonnegative: the recursion writes it as a sum
/// of squares.
pub fn gowers_preroot_exact(f: &FnTable, d: u32) -> Result<u128> {
    if f.codom_dim() != 1 {
        return Err(Error::NotBoolean { m: f.codom_dim() });
    }
    if d == 0 {
        return Err(Error::DimensionMismatch("norm order d must be >= 1".into()));
    }
    check_budget(f.dom_dim(), d)?;
    Ok(preroot_rec(f, d, true))
}

fn preroot_rec(f: &FnTable, d: u32, parallel: bool) -> u128 {
    match d {
        1 => {
            let ones: i64 = f.table().iter().map(|&b| b as i64).sum();
            let s = f.dom_size() as i64 - 2 * ones;
            (s * s) as u128
        }
        2 => u2_preroot_exact(f).expect("codomain checked by caller"),
        _ => {
            let size = 1u32 << f.dom_dim();
            if parallel && f.dom_dim() >= 6 {
                (0..size)
                    .into_par_iter()
                    .map(|y| preroot_rec(&derivative_raw(f, y), d - 1, false))
                    .sum()
            } else {
                (0..size)
                    .map(|y| preroot_rec(&derivative_raw(f, y), d - 1, false))
                    .sum()
            }
        }
    }
}

/// Exact U^d norm by integer accumulation followed by a single root.
pub fn gowers_norm_exact(f: &FnTable, d: u32) -> Result<GowersResult> {
    let preroot = gowers_preroot_exact(f, d)?;
    let n = f.dom_dim();
    let denom_log2 = n * (d + 1);
    let ratio = preroot as f64 / 2f64.powi(denom_log2 as i32);
    debug_assert!(ratio <= 1.0 + 1e-9);
    let value = ratio.powf(0.5f64.powi(d as i32));
    Ok(GowersResult {
        d,
        value,
        mode: NormMode::Exact,
        samples: None,
        std_error: None,
        signed_mean: None,
    })
}

/// Monte-Carlo estimate of U^d with a single worker. Reproducible per seed.
pub fn gowers_norm_sampled(f: &FnTable, d: u32, samples: u64, seed: u64) -> Result<GowersResult> {
    gowers_norm_sampled_workers(f, d, samples, seed, 1)
}

/// Monte-Carlo estimate with the sample budget split across `workers`
/// streams; worker `w` draws from a generator seeded with `seed + w`.
/// Deterministic for a fixed worker count, independent of scheduling.
pub fn gowers_norm_sampled_workers(
    f: &FnTable,
    d: u32,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<GowersResult> {
    if f.codom_dim() != 1 {
        return Err(Error::NotBoolean { m: f.codom_dim() });
    }
    if d == 0 {
        return Err(Error::DimensionMismatch("norm order d must be >= 1".into()));
    }
    if samples == 0 {
        return Err(Error::DimensionMismatch("need at least one sample".into()));
    }
    let workers = workers.max(1) as u64;
    let base = samples / workers;
    let rem = samples % workers;
    let chunks: Vec<(u64, u64)> = (0..workers)
        .map(|w| (w, base + u64::from(w < rem)))
        .filter(|&(_, c)| c > 0)
        .collect();
    let sums: Vec<i64> = chunks
        .par_iter()
        .map(|&(w, count)| sample_chunk(f, d, count, seed.wrapping_add(w)))
        .collect();
    let total: i64 = sums.iter().sum();
    let mean = total as f64 / samples as f64;
    // Products are +-1, so the sample variance is n(1 - mean^2)/(n - 1).
    let std_error = if samples >= 2 {
        ((1.0 - mean * mean).max(0.0) / (samples - 1) as f64).sqrt()
    } else {
        0.0
    };
    let value = mean.max(0.0).powf(0.5f64.powi(d as i32));
    Ok(GowersResult {
        d,
        value,
        mode: NormMode::Sampled,
        samples: Some(samples),
        std_error: Some(std_error),
        signed_mean: Some(mean),
    })
}

fn sample_chunk(f: &FnTable, d: u32, count: u64, seed: u64) -> i64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = f.dom_size() as u32;
    let mut ys = vec![0u32; d as usize];
    let mut sum = 0i64;
    for _ in 0..count {
        let x = rng.gen_range(0..size);
        for y in ys.iter_mut() {
            *y = rng.gen_range(0..size);
        }
        // Gray-code walk over the 2^d vertex sums.
        let mut acc = f.eval(x);
        let mut p = x;
        for i in 1u64..(1u64 << d) {
            p ^= ys[i.trailing_zeros() as usize];
            acc ^= f.eval(p);
        }
        sum += 1 - 2 * (acc & 1) as i64;
    }
    sum
}

/// GF(2) algebraic normal form of a truth table (in place): the zeta /
/// Moebius transform, its own inverse over F_2.
pub fn anf_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for chunk in bits.chunks_mut(2 * h) {
            for j in 0..h {
                chunk[j + h] ^= chunk[j];
            }
        }
        h *= 2;
    }
}

/// ANF coefficient vector of a Boolean function: entry `s` is the
/// coefficient of the monomial prod_{j in s} x_j.
pub fn anf_coefficients(f: &FnTable) -> Result<Vec<u8>> {
    if f.codom_dim() != 1 {
        return Err(Error::NotBoolean { m: f.codom_dim() });
    }
    let mut bits: Vec<u8> = f.table().iter().map(|&v| v as u8).collect();
    anf_transform(&mut bits);
    Ok(bits)
}

/// Builds the truth table of the polynomial with the given monomials
/// (each a subset code over the n variables).
pub fn fn_from_anf(n: u32, monomials: &[u32]) -> Result<FnTable> {
    crate::gf2::check_dim(n)?;
    let mut bits = vec![0u8; 1 << n];
    for &m in monomials {
        if m >= (1u32 << n) {
            return Err(Error::DimensionMismatch(format!(
                "monomial {m:#x} does not fit in {n} variables"
            )));
        }
        bits[m as usize] ^= 1;
    }
    anf_transform(&mut bits);
    let table = bits.iter().map(|&b| b as u32).collect();
    FnTable::new(n, 1, table)
}

/// Exact GF(2) degree: the largest weight of a monomial present in the
/// ANF. The zero function gets degree 0 (no negative-infinity sentinel).
pub fn polynomial_degree(f: &FnTable) -> Result<u32> {
    let coeffs = anf_coefficients(f)?;
    Ok(coeffs
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c == 1)
        .map(|(s, _)| (s as u32).count_ones())
        .max()
        .unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::PointF2;

    fn random_bool_fn(n: u32, seed: u64) -> FnTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FnTable::from_fn(n, 1, |_| rng.gen_range(0..2)).unwrap()
    }

    /// Independent oracle: the defining 2^{n(d+1)} loop, evaluated term by
    /// term. Only usable at tiny sizes.
    fn preroot_naive(f: &FnTable, d: u32) -> i128 {
        let n = f.dom_dim();
        let size = 1u32 << n;
        let mut total = 0i128;
        let tuples = 1u64 << (n * d);
        for x in 0..size {
            for t in 0..tuples {
                let ys: Vec<u32> = (0..d)
                    .map(|i| ((t >> (n * i)) & ((1 << n) - 1)) as u32)
                    .collect();
                let mut acc = 0u32;
                for mask in 0u32..(1 << d) {
                    let mut p = x;
                    for (i, &y) in ys.iter().enumerate() {
                        if (mask >> i) & 1 == 1 {
                            p ^= y;
                        }
                    }
                    acc ^= f.eval(p);
                }
                total += 1 - 2 * (acc as i128);
            }
        }
        total
    }

    #[test]
    fn exact_matches_naive_oracle() {
        for seed in 0..4 {
            let f = random_bool_fn(3, seed);
            for d in 1..=3 {
                let fast = gowers_preroot_exact(&f, d).unwrap();
                let naive = preroot_naive(&f, d);
                assert!(naive >= 0);
                assert_eq!(fast, naive as u128, "seed {seed} d {d}");
            }
        }
    }

    #[test]
    fn low_degree_functions_have_norm_one() {
        // Degree <= d - 1 forces U^d = 1, exactly.
        let quad = fn_from_anf(5, &[0b00011, 0b10100, 0b00001]).unwrap();
        assert_eq!(gowers_norm_exact(&quad, 3).unwrap().value, 1.0);
        let affine = fn_from_anf(5, &[0b00010, 0]).unwrap();
        assert_eq!(gowers_norm_exact(&affine, 2).unwrap().value, 1.0);
    }

    #[test]
    fn u1_is_absolute_bias() {
        let f = random_bool_fn(6, 9);
        let ones: i64 = f.table().iter().map(|&b| b as i64).sum();
        let bias = ((64 - 2 * ones) as f64 / 64.0).abs();
        let u1 = gowers_norm_exact(&f, 1).unwrap().value;
        assert!((u1 - bias).abs() < 1e-15);
    }

    #[test]
    fn and_function_norms() {
        let f = FnTable::from_fn(2, 1, |x| (x & 1) & (x >> 1)).unwrap();
        let u2 = gowers_norm_exact(&f, 2).unwrap().value;
        assert!((u2 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        assert_eq!(gowers_norm_exact(&f, 3).unwrap().value, 1.0);
    }

    #[test]
    fn u2_matches_spectral_identity() {
        for seed in 0..10 {
            let f = random_bool_fn(8, seed);
            let exact = gowers_norm_exact(&f, 2).unwrap().value;
            let spectral = crate::fourier::u2_via_spectrum(&f).unwrap();
            assert!((exact - spectral).abs() <= 1e-10);
        }
    }

    #[test]
    fn budget_error_names_feasible_n() {
        let f = random_bool_fn(10, 0);
        match gowers_preroot_exact(&f, 5) {
            Err(Error::ResourceLimit(msg)) => {
                assert!(msg.contains("feasible max n"), "{msg}");
            }
            other => panic!("expected resource limit, got {other:?}"),
        }
    }

    #[test]
    fn sampled_constant_function_is_one() {
        let f = FnTable::from_fn(5, 1, |_| 1).unwrap();
        let r = gowers_norm_sampled(&f, 3, 1000, 7).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.signed_mean, Some(1.0));
        assert_eq!(r.std_error, Some(0.0));
    }

    #[test]
    fn sampled_low_degree_has_all_positive_products() {
        let f = fn_from_anf(6, &[0b11, 0b1]).unwrap(); // degree 2
        let r = gowers_norm_sampled(&f, 3, 500, 3).unwrap();
        assert_eq!(r.signed_mean, Some(1.0));
    }

    #[test]
    fn sampled_mean_near_exact() {
        let f = random_bool_fn(8, 17);
        let exact = gowers_preroot_exact(&f, 3).unwrap() as f64 / 2f64.powi(32);
        let r = gowers_norm_sampled(&f, 3, 100_000, 5).unwrap();
        let se = r.std_error.unwrap();
        assert!((r.signed_mean.unwrap() - exact).abs() <= 3.0 * se);
    }

    #[test]
    fn sampled_reproducible_and_worker_merge_deterministic() {
        let f = random_bool_fn(7, 1);
        let a = gowers_norm_sampled_workers(&f, 2, 10_000, 99, 4).unwrap();
        let b = gowers_norm_sampled_workers(&f, 2, 10_000, 99, 4).unwrap();
        assert_eq!(a.signed_mean, b.signed_mean);
        // A different worker count is a different (documented) estimator.
        let c = gowers_norm_sampled_workers(&f, 2, 10_000, 99, 1).unwrap();
        assert!(c.signed_mean.is_some());
    }

    #[test]
    fn degree_examples() {
        let one = FnTable::from_fn(4, 1, |_| 1).unwrap();
        assert_eq!(polynomial_degree(&one).unwrap(), 0);
        let zero = FnTable::from_fn(4, 1, |_| 0).unwrap();
        assert_eq!(polynomial_degree(&zero).unwrap(), 0);
        let and = FnTable::from_fn(2, 1, |x| (x & 1) & (x >> 1)).unwrap();
        assert_eq!(polynomial_degree(&and).unwrap(), 2);
    }

    #[test]
    fn degree_matches_vanishing_derivative_oracle() {
        // Oracle: degree <= d - 1 iff every d-fold iterated derivative
        // vanishes; take the smallest such d - 1 by exhaustive search.
        let f = random_bool_fn(4, 23);
        let fast = polynomial_degree(&f).unwrap();
        let oracle = (1u32..=5)
            .find(|&d| {
                (0u64..1 << (4 * d)).all(|t| {
                    let ys: Vec<PointF2> = (0..d)
                        .map(|i| PointF2::new(4, ((t >> (4 * i)) & 15) as u32).unwrap())
                        .collect();
                    crate::gf2::iterated_derivative(&f, &ys)
                        .unwrap()
                        .table()
                        .iter()
                        .all(|&v| v == 0)
                })
            })
            .map(|d| d - 1)
            .expect("every function on 4 variables has degree <= 4");
        assert_eq!(fast, oracle);
    }

    #[test]
    fn norm_is_one_iff_degree_below_d() {
        for seed in 0..6 {
            let f = random_bool_fn(5, 100 + seed);
            let deg = polynomial_degree(&f).unwrap();
            for d in 1..=3u32 {
                let full = 1u128 << (5 * (d + 1));
                let preroot = gowers_preroot_exact(&f, d).unwrap();
                assert_eq!(preroot == full, deg <= d - 1, "seed {seed} d {d}");
            }
        }
    }
}
