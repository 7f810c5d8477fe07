//! Deterministic, seeded instance generators for every planted structure
//! the tests and pipelines consume.
//!
//! All randomness comes from ChaCha8 seeded with a caller-supplied 64-bit
//! value (`ChaCha8Rng::seed_from_u64`); identical parameters always yield
//! bit-identical artifacts. Each generator keeps enough planted metadata
//! for its recovery test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frac::Frac;
use crate::gf2::{
    basis_of, check_dim, difference_set, reduce_by_basis, span_of_basis, BitMatrix, FnTable,
    SubsetF2n,
};
use crate::gowers::fn_from_anf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GenKind {
    NoisyPolynomial,
    StructuredHom,
    SmallDoublingSet,
    RandomFunction,
    QuadraticPhase,
}

impl std::str::FromStr for GenKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noisy_polynomial" => Ok(GenKind::NoisyPolynomial),
            "structured_hom" => Ok(GenKind::StructuredHom),
            "small_doubling_set" => Ok(GenKind::SmallDoublingSet),
            "random_function" => Ok(GenKind::RandomFunction),
            "quadratic_phase" => Ok(GenKind::QuadraticPhase),
            other => Err(Error::Infeasible(format!("unknown generator kind `{other}`"))),
        }
    }
}

/// Full description of a generated instance; the same spec always
/// reproduces the same artifact.
#[derive(Clone, Debug, Serialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: u32,
    pub m: u32,
    pub degree: u32,
    pub rho: f64,
    pub image_bound: u64,
    pub coset_count: u32,
    pub subspace_dim: u32,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: GenKind, n: u32, seed: u64) -> Self {
        GenSpec {
            kind,
            n,
            m: 1,
            degree: 2,
            rho: 0.0,
            image_bound: 2,
            coset_count: 1,
            subspace_dim: 0,
            seed,
        }
    }
}

/// Planted metadata, serialized as the `.meta.json` sidecar.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenMeta {
    NoisyPolynomial {
        degree: u32,
        rho: f64,
        planted_anf: Vec<u32>,
        flips: u64,
        planted_agreement: Frac,
    },
    StructuredHom {
        image_bound: u64,
        linear_rows: Vec<u32>,
        error_values: Vec<u32>,
        achieved_delta_size: u64,
    },
    SmallDoublingSet {
        subspace_basis: Vec<u32>,
        coset_reps: Vec<u32>,
    },
    RandomFunction {},
    QuadraticPhase {
        planted_anf: Vec<u32>,
    },
}

/// A generated artifact: either a function table or a subset.
#[derive(Clone, Debug)]
pub enum Generated {
    Function { table: FnTable, meta: GenMeta },
    Set { set: SubsetF2n, meta: GenMeta },
}

/// Dispatches on the spec kind.
pub fn generate(spec: &GenSpec) -> Result<Generated> {
    match spec.kind {
        GenKind::NoisyPolynomial => {
            let (table, meta) = gen_noisy_polynomial(spec.n, spec.degree, spec.rho, spec.seed)?;
            Ok(Generated::Function { table, meta })
        }
        GenKind::StructuredHom => {
            let (table, meta) = gen_structured_hom(spec.n, spec.m, spec.image_bound, spec.seed)?;
            Ok(Generated::Function { table, meta })
        }
        GenKind::SmallDoublingSet => {
            let (set, meta) =
                gen_small_doubling_set(spec.n, spec.subspace_dim, spec.coset_count, spec.seed)?;
            Ok(Generated::Set { set, meta })
        }
        GenKind::RandomFunction => {
            let table = gen_random_function(spec.n, spec.m, spec.seed)?;
            Ok(Generated::Function {
                table,
                meta: GenMeta::RandomFunction {},
            })
        }
        GenKind::QuadraticPhase => {
            let (table, meta) = gen_quadratic_phase(spec.n, spec.seed)?;
            Ok(Generated::Function { table, meta })
        }
    }
}

/// f = l + e with l a seeded random linear map and e drawing from at most
/// `image_bound` fixed random values. The achieved |Delta f| is measured
/// and reported in the metadata; downstream bounds always consume the
/// measured value (the difference set can be as large as the three-fold
/// sum of the error image).
pub fn gen_structured_hom(
    n: u32,
    m: u32,
    image_bound: u64,
    seed: u64,
) -> Result<(FnTable, GenMeta)> {
    check_dim(n)?;
    check_dim(m)?;
    if image_bound == 0 || image_bound > 1 << m {
        return Err(Error::Infeasible(format!(
            "image bound {image_bound} must be in 1..=2^{m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<u32> = (0..n).map(|_| rng.gen_range(0..1u32 << m)).collect();
    let linear = BitMatrix::from_rows(m, rows.clone())?;
    let mut values: Vec<u32> = Vec::with_capacity(image_bound as usize);
    while (values.len() as u64) < image_bound {
        let v = rng.gen_range(0..1u32 << m);
        if !values.contains(&v) {
            values.push(v);
        }
    }
    let table = FnTable::from_fn(n, m, |x| {
        let e = values[rng.gen_range(0..values.len())];
        linear.mul_row_vector(x) ^ e
    })?;
    let achieved = difference_set(&table).size();
    let meta = GenMeta::StructuredHom {
        image_bound,
        linear_rows: rows,
        error_values: values,
        achieved_delta_size: achieved,
    };
    Ok((table, meta))
}

/// S = V + {v_1..v_r}: a random subspace of dimension `subspace_dim` plus
/// `coset_count` representatives chosen independent modulo V. (Placing the
/// representatives in the orthogonal complement would fix a coordinate
/// system without changing any doubling or span statistic.)
pub fn gen_small_doubling_set(
    n: u32,
    subspace_dim: u32,
    coset_count: u32,
    seed: u64,
) -> Result<(SubsetF2n, GenMeta)> {
    check_dim(n)?;
    if coset_count == 0 {
        return Err(Error::Infeasible("need at least one coset".into()));
    }
    if subspace_dim + coset_count > n {
        return Err(Error::Infeasible(format!(
            "subspace dim {subspace_dim} + coset count {coset_count} exceeds n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut combined: Vec<u32> = Vec::new();
    let draw_independent = |combined: &mut Vec<u32>, rng: &mut ChaCha8Rng| loop {
        let v = rng.gen_range(1..1u32 << n);
        if reduce_by_basis(v, combined) != 0 {
            let basis = basis_of(combined.iter().copied().chain([v]));
            *combined = basis;
            return v;
        }
    };
    let mut v_basis = Vec::new();
    for _ in 0..subspace_dim {
        v_basis.push(draw_independent(&mut combined, &mut rng));
    }
    let mut reps = Vec::new();
    for _ in 0..coset_count {
        reps.push(draw_independent(&mut combined, &mut rng));
    }
    let subspace = span_of_basis(n, &v_basis);
    let mut set = SubsetF2n::empty(n)?;
    for w in subspace.codes() {
        for &r in &reps {
            set.insert(w ^ r);
        }
    }
    let meta = GenMeta::SmallDoublingSet {
        subspace_basis: v_basis,
        coset_reps: reps,
    };
    Ok((set, meta))
}

fn random_anf(n: u32, max_degree: u32, rng: &mut ChaCha8Rng) -> Vec<u32> {
    (0u32..1 << n)
        .filter(|s| s.count_ones() <= max_degree)
        .filter(|_| rng.gen_bool(0.5))
        .collect()
}

/// A random polynomial of degree at most `degree` (each monomial of weight
/// <= degree independently present with probability 1/2) with every table
/// bit then flipped independently with probability `rho`.
pub fn gen_noisy_polynomial(n: u32, degree: u32, rho: f64, seed: u64) -> Result<(FnTable, GenMeta)> {
    check_dim(n)?;
    if !(0.0..0.5).contains(&rho) {
        return Err(Error::Infeasible(format!(
            "noise rate {rho} must lie in [0, 1/2)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let monomials = random_anf(n, degree.min(n), &mut rng);
    let clean = fn_from_anf(n, &monomials)?;
    let mut flips = 0u64;
    let table = FnTable::from_fn(n, 1, |x| {
        let bit = clean.eval(x);
        if rho > 0.0 && rng.gen_bool(rho) {
            flips += 1;
            bit ^ 1
        } else {
            bit
        }
    })?;
    let meta = GenMeta::NoisyPolynomial {
        degree,
        rho,
        planted_anf: monomials,
        flips,
        planted_agreement: Frac::new((1u128 << n) - flips as u128, 1 << n),
    };
    Ok((table, meta))
}

/// A uniformly random function table.
pub fn gen_random_function(n: u32, m: u32, seed: u64) -> Result<FnTable> {
    check_dim(n)?;
    check_dim(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FnTable::from_fn(n, m, |_| rng.gen_range(0..1u32 << m))
}

/// A pure random quadratic (degree <= 2, no noise).
pub fn gen_quadratic_phase(n: u32, seed: u64) -> Result<(FnTable, GenMeta)> {
    check_dim(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let monomials = random_anf(n, 2, &mut rng);
    let table = fn_from_anf(n, &monomials)?;
    Ok((
        table,
        GenMeta::QuadraticPhase {
            planted_anf: monomials,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{set_stats, sumset};
    use crate::gowers::{gowers_norm_exact, gowers_preroot_exact, polynomial_degree};

    #[test]
    fn structured_hom_with_one_value_is_affine() {
        let (f, meta) = gen_structured_hom(4, 3, 1, 5).unwrap();
        let d = difference_set(&f);
        assert_eq!(d.size(), 1);
        match meta {
            GenMeta::StructuredHom {
                error_values,
                achieved_delta_size,
                ..
            } => {
                assert_eq!(error_values.len(), 1);
                assert_eq!(achieved_delta_size, 1);
            }
            other => panic!("wrong meta {other:?}"),
        }
    }

    #[test]
    fn structured_hom_delta_bounded_by_cube_of_image() {
        let (f, meta) = gen_structured_hom(4, 3, 2, 7).unwrap();
        let d = difference_set(&f);
        assert!(d.size() <= 8, "measured {}", d.size());
        match meta {
            GenMeta::StructuredHom {
                achieved_delta_size,
                ..
            } => assert_eq!(achieved_delta_size, d.size()),
            other => panic!("wrong meta {other:?}"),
        }
    }

    #[test]
    fn structured_hom_with_full_image_is_nearly_random() {
        let (f, _) = gen_structured_hom(5, 3, 8, 11).unwrap();
        let d = difference_set(&f);
        assert!(d.size() >= 4, "measured {}", d.size());
    }

    #[test]
    fn small_doubling_single_coset_has_doubling_one() {
        let (s, _) = gen_small_doubling_set(6, 3, 1, 2).unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(set_stats(&s).unwrap().doubling, Frac::one());
    }

    #[test]
    fn small_doubling_coset_union_statistics() {
        let (s, _) = gen_small_doubling_set(10, 3, 4, 13).unwrap();
        let stats = set_stats(&s).unwrap();
        assert_eq!(stats.size, 4 * 8);
        assert_eq!(stats.span_size, 1 << 7);
        // |S+S| tracks (r/2)|S| for this construction: K stays near r/2.
        let k = stats.doubling.to_f64();
        assert!(k <= 4.0, "doubling {k}");
    }

    #[test]
    fn small_doubling_zero_dim_subspace_is_independent_points() {
        let (s, _) = gen_small_doubling_set(8, 0, 4, 3).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(sumset(&s).unwrap().len(), 7);
    }

    #[test]
    fn small_doubling_rejects_infeasible_dims() {
        assert!(gen_small_doubling_set(4, 3, 2, 0).is_err());
    }

    #[test]
    fn noiseless_quadratic_has_u3_one() {
        let (f, _) = gen_noisy_polynomial(6, 2, 0.0, 9).unwrap();
        assert_eq!(gowers_norm_exact(&f, 3).unwrap().value, 1.0);
    }

    #[test]
    fn noisy_quadratic_agreement_bounds_u3() {
        let (f, meta) = gen_noisy_polynomial(8, 2, 0.1, 4).unwrap();
        let GenMeta::NoisyPolynomial {
            planted_agreement, ..
        } = meta
        else {
            panic!("wrong meta");
        };
        let a = planted_agreement.to_f64();
        assert!((a - 0.9).abs() < 0.05, "agreement {a}");
        // U^3 >= 2a - 1 whenever a >= 1/2 (exact integer comparison).
        let eps = 2.0 * a - 1.0;
        let preroot = gowers_preroot_exact(&f, 3).unwrap() as f64;
        let u3 = (preroot / 2f64.powi(32)).powf(1.0 / 8.0);
        assert!(u3 >= eps - 1e-12, "u3 {u3} < eps {eps}");
    }

    #[test]
    fn full_degree_polynomial_runs() {
        let (f, _) = gen_noisy_polynomial(4, 4, 0.0, 1).unwrap();
        assert!(polynomial_degree(&f).unwrap() <= 4);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_random_function(6, 3, 77).unwrap();
        let b = gen_random_function(6, 3, 77).unwrap();
        assert_eq!(a, b);
        let (s1, _) = gen_small_doubling_set(9, 2, 3, 5).unwrap();
        let (s2, _) = gen_small_doubling_set(9, 2, 3, 5).unwrap();
        assert_eq!(s1, s2);
        let (f1, _) = gen_noisy_polynomial(7, 3, 0.2, 5).unwrap();
        let (f2, _) = gen_noisy_polynomial(7, 3, 0.2, 5).unwrap();
        assert_eq!(f1, f2);
    }

    #[test]
    fn random_function_u2_is_small() {
        // Concentration for a uniform f: U^2 is near (3 * 2^-n)^{1/4},
        // about 0.23 at n = 10.
        for seed in 0..20 {
            let f = gen_random_function(10, 1, seed).unwrap();
            let u2 = crate::fourier::u2_via_spectrum(&f).unwrap();
            assert!(u2 < 0.27, "seed {seed}: u2 = {u2}");
        }
    }

    #[test]
    fn tiny_random_function_is_reproducible() {
        let f = gen_random_function(1, 1, 3).unwrap();
        assert_eq!(f, gen_random_function(1, 1, 3).unwrap());
        assert!(f.table().iter().all(|&v| v < 2));
    }
}
