//! Walsh-Hadamard analysis of Boolean functions: full spectra, the best
//! affine approximation, and the U^2 norm through the L_4 identity on the
//! spectrum.
//!
//! Coefficients are stored as the raw integer transform values W(alpha) =
//! sum_x (-1)^{f(x) + <alpha, x>}; the real coefficient is W(alpha) / 2^n,
//! an exact dyadic rational for every n we support.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frac::Frac;
use crate::gf2::{FnTable, PointF2};

/// All 2^n Walsh coefficients of a Boolean function.
#[derive(Clone, Debug)]
pub struct FourierSpectrum {
    dim: u32,
    raw: Vec<i32>,
}

impl FourierSpectrum {
    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// The coefficient at character alpha: E_x[(-1)^{f(x) + <alpha, x>}].
    pub fn coeff(&self, alpha: u32) -> f64 {
        self.raw[alpha as usize] as f64 / (1u64 << self.dim) as f64
    }

    /// Integer transform value 2^n * coeff(alpha).
    pub fn raw(&self, alpha: u32) -> i32 {
        self.raw[alpha as usize]
    }

    pub fn raw_values(&self) -> &[i32] {
        &self.raw
    }

    pub fn coeffs(&self) -> Vec<f64> {
        let scale = 1.0 / (1u64 << self.dim) as f64;
        self.raw.iter().map(|&w| w as f64 * scale).collect()
    }

    /// Sum of squared coefficients; exactly 1 for every Boolean function.
    pub fn parseval_sum(&self) -> f64 {
        let total: u128 = self.raw.iter().map(|&w| (w as i128 * w as i128) as u128).sum();
        total as f64 / (1u128 << (2 * self.dim)) as f64
    }
}

/// The best affine approximation of a Boolean function: the character
/// `alpha` (plus an output flip) maximizing agreement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineApprox {
    pub alpha: PointF2,
    pub shift_bit: bool,
    /// Exact agreement (1 + |coeff(alpha)|) / 2, in [1/2, 1].
    pub agreement: Frac,
}

/// In-place fast Walsh-Hadamard transform of integer values.
pub fn wht_in_place(data: &mut [i32]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        let stride = 2 * h;
        if n >= 1 << 15 {
            data.par_chunks_mut(stride).for_each(|chunk| butterfly(chunk, h));
        } else {
            for chunk in data.chunks_mut(stride) {
                butterfly(chunk, h);
            }
        }
        h = stride;
    }
}

#[inline]
fn butterfly(chunk: &mut [i32], h: usize) {
    for j in 0..h {
        let a = chunk[j];
        let b = chunk[j + h];
        chunk[j] = a + b;
        chunk[j + h] = a - b;
    }
}

/// The full Walsh spectrum of a Boolean function (m = 1), exact.
pub fn wht_spectrum(f: &FnTable) -> Result<FourierSpectrum> {
    if f.codom_dim() != 1 {
        return Err(Error::NotBoolean { m: f.codom_dim() });
    }
    let mut raw: Vec<i32> = f.table().iter().map(|&b| 1 - 2 * b as i32).collect();
    wht_in_place(&mut raw);
    Ok(FourierSpectrum {
        dim: f.dom_dim(),
        raw,
    })
}

/// Best affine approximation: argmax_alpha |coeff(alpha)|, ties broken by
/// the smallest character code; the output is flipped when the coefficient
/// is negative, so agreement always lands in [1/2, 1].
pub fn best_affine_approx(f: &FnTable) -> Result<AffineApprox> {
    let spec = wht_spectrum(f)?;
    Ok(best_affine_of_spectrum(&spec))
}

pub fn best_affine_of_spectrum(spec: &FourierSpectrum) -> AffineApprox {
    // Deterministic regardless of chunking: (|W|, smaller alpha) is a
    // total order because alpha codes are unique.
    let (alpha, w) = spec
        .raw_values()
        .par_iter()
        .enumerate()
        .map(|(a, &w)| (a as u32, w))
        .reduce(
            || (0u32, i32::MIN),
            |best, cand| {
                let (ba, bw) = best;
                let (ca, cw) = cand;
                if bw == i32::MIN {
                    return cand;
                }
                if cw == i32::MIN {
                    return best;
                }
                match cw.unsigned_abs().cmp(&bw.unsigned_abs()) {
                    std::cmp::Ordering::Greater => cand,
                    std::cmp::Ordering::Less => best,
                    std::cmp::Ordering::Equal => {
                        if ca < ba {
                            cand
                        } else {
                            best
                        }
                    }
                }
            },
        );
    let n = spec.dim();
    let half = 1u128 << n;
    AffineApprox {
        alpha: PointF2::new(n, alpha).expect("alpha indexes the spectrum"),
        shift_bit: w < 0,
        agreement: Frac::new(half + w.unsigned_abs() as u128, 2 * half),
    }
}

/// Exact integer numerator of U^2(f)^4: sum_alpha W(alpha)^4 / 2^n, a
/// nonnegative integer (the full expectation has denominator 2^{3n}).
pub fn u2_preroot_exact(f: &FnTable) -> Result<u128> {
    let spec = wht_spectrum(f)?;
    let total: u128 = spec
        .raw_values()
        .iter()
        .map(|&w| {
            let w2 = (w as i128 * w as i128) as u128;
            w2 * w2
        })
        .sum();
    let n = f.dom_dim();
    debug_assert_eq!(total % (1u128 << n), 0);
    Ok(total >> n)
}

/// The U^2 norm via the spectral identity: (sum_alpha coeff^4)^{1/4}.
pub fn u2_via_spectrum(f: &FnTable) -> Result<f64> {
    let n = f.dom_dim();
    let preroot = u2_preroot_exact(f)?;
    Ok(((preroot as f64) / (1u128 << (3 * n)) as f64).powf(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_bool_fn(n: u32, seed: u64) -> FnTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FnTable::from_fn(n, 1, |_| rng.gen_range(0..2)).unwrap()
    }

    #[test]
    fn spectrum_of_zero_function() {
        let f = FnTable::from_fn(3, 1, |_| 0).unwrap();
        let spec = wht_spectrum(&f).unwrap();
        assert_eq!(spec.coeff(0), 1.0);
        for a in 1..8 {
            assert_eq!(spec.coeff(a), 0.0);
        }
    }

    #[test]
    fn spectrum_of_character() {
        let alpha0 = 0b101u32;
        let f = FnTable::from_fn(3, 1, |x| crate::gf2::dot(alpha0, x)).unwrap();
        let spec = wht_spectrum(&f).unwrap();
        assert_eq!(spec.coeff(alpha0), 1.0);
        for a in 0..8 {
            if a != alpha0 {
                assert_eq!(spec.coeff(a), 0.0);
            }
        }
    }

    #[test]
    fn spectrum_of_and_matches_direct_evaluation() {
        let f = FnTable::from_fn(2, 1, |x| (x & 1) & (x >> 1)).unwrap();
        let spec = wht_spectrum(&f).unwrap();
        // Oracle: the definition, evaluated directly at each alpha.
        for alpha in 0..4u32 {
            let direct: i32 = (0..4u32)
                .map(|x| 1 - 2 * ((f.eval(x) ^ crate::gf2::dot(alpha, x)) as i32))
                .sum();
            assert_eq!(spec.raw(alpha), direct);
            assert_eq!(spec.coeff(alpha).abs(), 0.5);
        }
    }

    #[test]
    fn parseval_holds() {
        for seed in 0..5 {
            let f = random_bool_fn(7, seed);
            let spec = wht_spectrum(&f).unwrap();
            assert!((spec.parseval_sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn best_affine_of_affine_function() {
        let alpha0 = 0b0110u32;
        let f = FnTable::from_fn(4, 1, |x| crate::gf2::dot(alpha0, x) ^ 1).unwrap();
        let a = best_affine_approx(&f).unwrap();
        assert_eq!(a.alpha.code(), alpha0);
        assert!(a.shift_bit);
        assert_eq!(a.agreement, Frac::one());
    }

    #[test]
    fn best_affine_of_and_uses_tie_break() {
        let f = FnTable::from_fn(2, 1, |x| (x & 1) & (x >> 1)).unwrap();
        let a = best_affine_approx(&f).unwrap();
        // All four coefficients tie at |1/2|; the smallest code wins.
        assert_eq!(a.alpha.code(), 0);
        assert!(!a.shift_bit);
        assert_eq!(a.agreement, Frac::new(3, 4));
    }

    #[test]
    fn planted_character_recovered_under_noise() {
        let alpha0 = 0b1011001001u32;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let f = FnTable::from_fn(10, 1, |x| {
            let clean = crate::gf2::dot(alpha0, x);
            if rng.gen_bool(0.10) {
                clean ^ 1
            } else {
                clean
            }
        })
        .unwrap();
        let a = best_affine_approx(&f).unwrap();
        assert_eq!(a.alpha.code(), alpha0);
        assert!((a.agreement.to_f64() - 0.9).abs() < 0.03);
    }

    #[test]
    fn u2_of_affine_is_one() {
        let f = FnTable::from_fn(5, 1, |x| crate::gf2::dot(0b10110, x)).unwrap();
        assert_eq!(u2_via_spectrum(&f).unwrap(), 1.0);
    }

    #[test]
    fn u2_of_and_is_inverse_sqrt2() {
        let f = FnTable::from_fn(2, 1, |x| (x & 1) & (x >> 1)).unwrap();
        let u2 = u2_via_spectrum(&f).unwrap();
        assert!((u2 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn u2_lower_bounds_affine_agreement() {
        // U^2 >= 2a - 1 where a is the best affine agreement.
        for seed in 0..10 {
            let f = random_bool_fn(6, seed);
            let a = best_affine_approx(&f).unwrap();
            let u2 = u2_via_spectrum(&f).unwrap();
            assert!(u2 + 1e-12 >= 2.0 * a.agreement.to_f64() - 1.0);
        }
    }
}
