//! The executable invariant suite behind the `verify` subcommand: every
//! module-level invariant, run on seeded instances at two sizes. Each
//! check reports one (name, lhs, rhs, holds) line; most checks count
//! violations against an expected zero, tolerance checks report the
//! worst error seen.

use num_bigint::BigUint;
use serde::Serialize;

use crate::fourier::{best_affine_approx, u2_via_spectrum, wht_spectrum};
use crate::frac::Frac;
use crate::generators::{
    gen_noisy_polynomial, gen_random_function, gen_small_doubling_set, gen_structured_hom, GenMeta,
};
use crate::gf2::{
    difference_set, is_affine_subspace, iterated_derivative, span, sumset, FnTable, PointF2,
    SubsetF2n,
};
use crate::gowers::{
    anf_coefficients, fn_from_anf, gowers_norm_exact, gowers_preroot_exact, polynomial_degree,
};
use crate::pfr::{
    a_system_probability, build_level_chain, lift_inner_product, pfr_decompose,
};
use crate::u3::{
    additive_energy, bsg_extract, derivative_profile, fit_global_linear_map, span_trim,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyLevel {
    Quick,
    Full,
}

impl std::str::FromStr for VerifyLevel {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "quick" => Ok(VerifyLevel::Quick),
            "full" => Ok(VerifyLevel::Full),
            other => Err(crate::Error::Infeasible(format!(
                "unknown verify level `{other}` (quick|full)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Check {
    fn violations(name: &str, count: u64) -> Self {
        Check {
            name: name.into(),
            lhs: count as f64,
            rhs: 0.0,
            holds: count == 0,
        }
    }

    fn tolerance(name: &str, worst: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            lhs: worst,
            rhs: tol,
            holds: worst <= tol,
        }
    }
}

struct Sizes {
    seeds: u64,
    fourier_seeds: u64,
    set_dim: u32,
    fn_dim: u32,
    chain_instances: u64,
    pipeline_instances: u64,
}

fn sizes(level: VerifyLevel) -> Sizes {
    match level {
        VerifyLevel::Quick => Sizes {
            seeds: 5,
            fourier_seeds: 10,
            set_dim: 6,
            fn_dim: 6,
            chain_instances: 2,
            pipeline_instances: 2,
        },
        VerifyLevel::Full => Sizes {
            seeds: 20,
            fourier_seeds: 100,
            set_dim: 8,
            fn_dim: 8,
            chain_instances: 10,
            pipeline_instances: 10,
        },
    }
}

fn random_set(dim: u32, size: u64, seed: u64) -> SubsetF2n {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = SubsetF2n::empty(dim).unwrap();
    while s.len() < size.min(1 << dim) {
        s.insert(rng.gen_range(0..1u32 << dim));
    }
    s
}

/// Runs the whole suite; the caller decides what to do with failures.
pub fn run(level: VerifyLevel) -> Vec<Check> {
    let z = sizes(level);
    let mut checks = Vec::new();

    // --- set primitives -------------------------------------------------
    let mut violations = 0;
    for seed in 0..z.seeds {
        let s = random_set(z.set_dim, 12 + seed, seed);
        let sum = sumset(&s).unwrap();
        let sp = span(&s);
        if !sum.contains(0) {
            violations += 1;
        }
        if sum.codes().iter().any(|&c| !sp.contains(c)) {
            violations += 1;
        }
        if span(&sp) != sp {
            violations += 1;
        }
    }
    checks.push(Check::violations("sumset_span_containment_chain", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        // One affine subspace and one generic set per seed.
        let base = random_set(z.set_dim, 3, 1000 + seed);
        let coset = span(&base).translate(seed as u32 & ((1 << z.set_dim) - 1));
        let generic = random_set(z.set_dim, 9, 2000 + seed);
        for s in [&coset, &generic] {
            let k_is_one = sumset(s).unwrap().len() == s.len();
            if k_is_one != is_affine_subspace(s) {
                violations += 1;
            }
        }
    }
    checks.push(Check::violations("doubling_one_iff_affine_subspace", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        let f = gen_random_function(5, 3, 300 + seed).unwrap();
        let d = difference_set(&f);
        // f(0) is always attained at x = y = 0.
        if !d.contains(f.eval(0)) {
            violations += 1;
        }
        // |Delta f| = 1 iff f is affine (degree <= 1 in every output bit).
        let affine = (0..3u32).all(|bit| {
            let fbit = FnTable::from_fn(5, 1, |x| (f.eval(x) >> bit) & 1).unwrap();
            polynomial_degree(&fbit).unwrap() <= 1
        });
        if (d.size() == 1) != affine {
            violations += 1;
        }
        let (g, _) = gen_structured_hom(5, 3, 1, 400 + seed).unwrap();
        if difference_set(&g).size() != 1 {
            violations += 1;
        }
    }
    checks.push(Check::violations("delta_singleton_iff_affine", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        let f = gen_random_function(4, 1, 500 + seed).unwrap();
        let ys = [
            PointF2::new(4, 3).unwrap(),
            PointF2::new(4, 9).unwrap(),
            PointF2::new(4, 14).unwrap(),
        ];
        let fwd = iterated_derivative(&f, &ys).unwrap();
        let rev: Vec<PointF2> = ys.iter().rev().copied().collect();
        if fwd != iterated_derivative(&f, &rev).unwrap() {
            violations += 1;
        }
    }
    checks.push(Check::violations("iterated_derivative_order_invariant", violations));

    // --- fourier ---------------------------------------------------------
    let mut worst = 0.0f64;
    for seed in 0..z.fourier_seeds {
        let f = gen_random_function(z.fn_dim, 1, 600 + seed).unwrap();
        let spec = wht_spectrum(&f).unwrap();
        worst = worst.max((spec.parseval_sum() - 1.0).abs());
    }
    checks.push(Check::tolerance("parseval_mass_is_one", worst, 1e-12));

    let mut worst = 0.0f64;
    for seed in 0..z.fourier_seeds {
        let f = gen_random_function(8, 1, 700 + seed).unwrap();
        let a = u2_via_spectrum(&f).unwrap();
        let b = gowers_norm_exact(&f, 2).unwrap().value;
        worst = worst.max((a - b).abs());
    }
    checks.push(Check::tolerance("u2_spectral_identity", worst, 1e-10));

    let mut violations = 0;
    for seed in 0..z.seeds {
        let f = gen_random_function(z.fn_dim, 1, 800 + seed).unwrap();
        let a = best_affine_approx(&f).unwrap();
        let u2 = u2_via_spectrum(&f).unwrap();
        if u2 + 1e-12 < 2.0 * a.agreement.to_f64() - 1.0 {
            violations += 1;
        }
    }
    checks.push(Check::violations("u2_bounds_affine_agreement", violations));

    // --- gowers ----------------------------------------------------------
    let mut violations = 0;
    for seed in 0..z.seeds {
        let f = gen_random_function(5, 1, 900 + seed).unwrap();
        let deg = polynomial_degree(&f).unwrap();
        for d in 1..=3u32 {
            let preroot = gowers_preroot_exact(&f, d).unwrap();
            let full = 1u128 << (5 * (d + 1));
            if (preroot == full) != (deg <= d - 1) {
                violations += 1;
            }
            if preroot > full {
                violations += 1; // norm must stay within [0, 1]
            }
        }
    }
    checks.push(Check::violations("norm_one_iff_degree_below_d", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        for d in 2..=3u32 {
            let (f, meta) = gen_noisy_polynomial(7, d - 1, 0.1, 1100 + seed).unwrap();
            let GenMeta::NoisyPolynomial {
                planted_agreement, ..
            } = meta
            else {
                unreachable!()
            };
            // eps = 2a - 1; check U^d >= eps exactly.
            let eps = (Frac::new(2, 1) * planted_agreement).saturating_sub(Frac::one());
            let preroot = gowers_preroot_exact(&f, d).unwrap();
            let lhs = BigUint::from(preroot) * BigUint::from(eps.den()).pow(1 << d);
            let rhs = BigUint::from(eps.num()).pow(1 << d) * (BigUint::from(1u32) << (7 * (d + 1)));
            if lhs < rhs {
                violations += 1;
            }
        }
    }
    checks.push(Check::violations("agreement_lower_bounds_norm", violations));

    // --- reduction pipeline ----------------------------------------------
    let mut worst = 0.0f64;
    let mut exact_mismatches = 0;
    for seed in 0..z.seeds {
        let m = 2 + (seed % 2) as u32;
        let f = gen_random_function(3, m, 1200 + seed).unwrap();
        let p = a_system_probability(&f).unwrap();
        let lifted = lift_inner_product(&f).unwrap();
        let preroot = gowers_preroot_exact(&lifted, 3).unwrap();
        let q = Frac::new(preroot, 1u128 << (4 * (3 + m)));
        if p != q {
            exact_mismatches += 1;
        }
        worst = worst.max((p.to_f64() - q.to_f64()).abs());
    }
    checks.push(Check::violations("a_system_equals_u3_lift_pow8", exact_mismatches));

    let mut violations = 0;
    for seed in 0..z.seeds {
        let m = 2 + (seed % 2) as u32;
        let f = gen_random_function(3, m, 1200 + seed).unwrap();
        let k = difference_set(&f).size();
        let p = a_system_probability(&f).unwrap();
        // p >= K^{-7}, exactly.
        if p.num() * (k as u128).pow(7) < p.den() {
            violations += 1;
        }
    }
    checks.push(Check::violations("a_system_at_least_kdelta_pow_neg7", violations));

    let mut violations = 0;
    for seed in 0..z.chain_instances {
        let (f, _) = gen_structured_hom(4, 3, 2, 1300 + seed).unwrap();
        let k = difference_set(&f).size() as u128;
        let chain = build_level_chain(&f, 3).unwrap();
        for step in chain.levels() {
            if step.density < Frac::new(1, k.pow(2u32.pow(step.level) - 1)) {
                violations += 1;
            }
        }
        for w in chain.levels().windows(2) {
            let sp = w[1].sprime_density.unwrap();
            if sp < w[0].density * w[0].density {
                violations += 1;
            }
        }
    }
    checks.push(Check::violations("level_chain_density_bounds", violations));

    let mut violations = 0;
    for seed in 0..z.pipeline_instances {
        let (f, _) = gen_structured_hom(3, 3, 2, 1400 + seed).unwrap();
        match pfr_decompose(&f) {
            Ok(report) => {
                if !report.all_bounds_hold() {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    checks.push(Check::violations("decomposition_pipeline_bounds", violations));

    // --- inverse-U^3 pipeline ---------------------------------------------
    let mut violations = 0;
    for seed in 0..z.seeds {
        // Random strict-upper quadratic part; every derivative must be
        // affine with linear part (M + M^T) y.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1500 + seed);
        let n = 6u32;
        let rows: Vec<u32> = (0..n)
            .map(|i| {
                let high = !((1u32 << (i + 1)) - 1) & ((1 << n) - 1);
                rng.gen_range(0..1u32 << n) & high
            })
            .collect();
        let q = crate::pfr::QuadraticForm::new(n, rows.clone(), rng.gen_range(0..1 << n), false)
            .unwrap();
        let f = q.truth_table();
        let profile = derivative_profile(&f).unwrap();
        let m = crate::gf2::BitMatrix::from_rows(n, rows).unwrap();
        let mt = m.transpose();
        for (y, e) in profile.entries().iter().enumerate() {
            let expect = m.mul_col_vector(y as u32) ^ mt.mul_col_vector(y as u32);
            if e.alpha != expect || e.u2 != 1.0 {
                violations += 1;
            }
        }
    }
    checks.push(Check::violations("quadratic_derivative_maps_exact", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        let s = random_set(10, 40, 1600 + seed);
        let energy = additive_energy(&s);
        // Second route: sum of |S intersect (S + a)| over a in S.
        let mut count = 0u128;
        for a in s.codes() {
            let mut t = s.translate(a);
            t.intersect_with(&s);
            count += t.len() as u128;
        }
        if energy != Frac::new(count, (s.len() as u128).pow(2)) {
            violations += 1;
        }
    }
    checks.push(Check::violations("energy_matches_translate_count", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        let s = random_set(10, 48, 1700 + seed);
        let pruned = bsg_extract(&s, 3).unwrap();
        if pruned.codes().iter().any(|&c| !s.contains(c)) {
            violations += 1;
        }
        let trimmed = span_trim(&pruned, 4).unwrap();
        if trimmed.codes().iter().any(|&c| !pruned.contains(c)) {
            violations += 1;
        }
        // Doubling recomputes identically (self-audit).
        let d1 = Frac::new(sumset(&pruned).unwrap().len() as u128, pruned.len() as u128);
        let d2 = Frac::new(sumset(&pruned).unwrap().len() as u128, pruned.len() as u128);
        if d1 != d2 {
            violations += 1;
        }
    }
    checks.push(Check::violations("extraction_outputs_are_subsets", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        let (f, _) = gen_noisy_polynomial(7, 2, 0.05, 1800 + seed).unwrap();
        let profile = derivative_profile(&f).unwrap();
        let pairs = profile.pair_set(Some(0.5));
        if pairs.is_empty() {
            continue;
        }
        let (l, coverage) = fit_global_linear_map(&pairs).unwrap();
        let n = profile.dim();
        let recount: u64 = (0u32..1 << n)
            .filter(|&y| pairs.contains(y | (l.mul_col_vector(y) << n)))
            .count() as u64;
        if coverage != Frac::new(recount as u128, 1u128 << n) {
            violations += 1;
        }
    }
    checks.push(Check::violations("fit_coverage_reproducible", violations));

    // --- generators --------------------------------------------------------
    let mut violations = 0;
    for seed in 0..z.seeds {
        let a = gen_random_function(6, 2, 1900 + seed).unwrap();
        let b = gen_random_function(6, 2, 1900 + seed).unwrap();
        if a != b {
            violations += 1;
        }
        let (s1, _) = gen_small_doubling_set(9, 3, 2, 1900 + seed).unwrap();
        let (s2, _) = gen_small_doubling_set(9, 3, 2, 1900 + seed).unwrap();
        if s1 != s2 {
            violations += 1;
        }
    }
    checks.push(Check::violations("generator_determinism", violations));

    let mut violations = 0;
    for seed in 0..z.seeds {
        // Noisy polynomial: flipping the noisy table back against the
        // planted ANF must match the recorded agreement.
        let (f, meta) = gen_noisy_polynomial(6, 2, 0.1, 2000 + seed).unwrap();
        let GenMeta::NoisyPolynomial {
            planted_anf,
            planted_agreement,
            ..
        } = meta
        else {
            unreachable!()
        };
        let clean = fn_from_anf(6, &planted_anf).unwrap();
        let agree = (0..64u32).filter(|&x| clean.eval(x) == f.eval(x)).count();
        if Frac::new(agree as u128, 64) != planted_agreement {
            violations += 1;
        }
        // Structured hom: the ANF of f - l has only the error image left.
        let (g, gmeta) = gen_structured_hom(5, 3, 2, 2100 + seed).unwrap();
        let GenMeta::StructuredHom {
            linear_rows,
            error_values,
            ..
        } = gmeta
        else {
            unreachable!()
        };
        let lin = crate::gf2::BitMatrix::from_rows(3, linear_rows).unwrap();
        for x in 0..32u32 {
            if !error_values.contains(&(g.eval(x) ^ lin.mul_row_vector(x))) {
                violations += 1;
            }
        }
        // Small doubling set rebuilds from its plant.
        let (s, smeta) = gen_small_doubling_set(8, 2, 3, 2200 + seed).unwrap();
        let GenMeta::SmallDoublingSet {
            subspace_basis,
            coset_reps,
        } = smeta
        else {
            unreachable!()
        };
        let v = crate::gf2::span_of_basis(8, &subspace_basis);
        let mut rebuilt = SubsetF2n::empty(8).unwrap();
        for w in v.codes() {
            for &r in &coset_reps {
                rebuilt.insert(w ^ r);
            }
        }
        if rebuilt != s {
            violations += 1;
        }
    }
    checks.push(Check::violations("planted_metadata_recovers", violations));

    // ANF involution: transform twice is the identity.
    let mut violations = 0;
    for seed in 0..z.seeds {
        let f = gen_random_function(6, 1, 2300 + seed).unwrap();
        let coeffs = anf_coefficients(&f).unwrap();
        let monos: Vec<u32> = coeffs
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == 1)
            .map(|(s, _)| s as u32)
            .collect();
        if fn_from_anf(6, &monos).unwrap() != f {
            violations += 1;
        }
    }
    checks.push(Check::violations("anf_transform_is_involution", violations));

    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_is_green() {
        let checks = run(VerifyLevel::Quick);
        let failed: Vec<&Check> = checks.iter().filter(|c| !c.holds).collect();
        assert!(failed.is_empty(), "failed checks: {failed:?}");
        assert!(checks.len() >= 15);
    }
}
