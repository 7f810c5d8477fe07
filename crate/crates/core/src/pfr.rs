//! The decomposition pipeline from a function with a small difference set
//! to a linear map with a small error image:
//!
//! 1. lift f to the Boolean form F(x, z) = <f(x), z> and certify that its
//!    U^3 norm is at least |Delta f|^{-7/8} (via the level-chain count);
//! 2. find a quadratic Q agreeing with F noticeably better than 1/2 — at
//!    desk scale an exhaustive Reed-Muller order-2 search stands in for
//!    the inverse-U^3 oracle, and an injection point accepts an external Q
//!    for larger instances;
//! 3. extract the bilinear part of Q as a matrix A, giving the linear map
//!    l(x) = x^T A and the best shift c;
//! 4. run the greedy covering argument to certify that the error image
//!    {f(x) + l(x)} has at most |Delta f|^2 / eps values.
//!
//! Every greedy choice breaks ties by the smallest integer code, so the
//! whole pipeline is deterministic regardless of worker count. Frequencies
//! and densities stay exact integer ratios end to end; floats appear only
//! where a root has been taken.

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::frac::Frac;
use crate::gf2::{difference_set, dot, sumset, BitMatrix, FnTable, SubsetF2n};
use crate::gowers::gowers_preroot_exact;

/// Largest dimension the exhaustive quadratic search will take on: the
/// space has 2^{N(N-1)/2 + N + 1} candidates.
pub const MAX_EXHAUSTIVE_QUADRATIC_DIM: u32 = 6;

/// A quadratic form over F_2^N: a strictly upper-triangular coefficient
/// matrix, a linear part, and a constant bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticForm {
    dim: u32,
    quad: Vec<u32>,
    lin: u32,
    const_bit: bool,
}

impl QuadraticForm {
    pub fn new(dim: u32, quad: Vec<u32>, lin: u32, const_bit: bool) -> Result<Self> {
        crate::gf2::check_dim(dim)?;
        if quad.len() != dim as usize {
            return Err(Error::DimensionMismatch(format!(
                "quadratic part has {} rows, expected {dim}",
                quad.len()
            )));
        }
        for (i, &row) in quad.iter().enumerate() {
            let low = (1u32 << (i + 1)) - 1;
            if row & low != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} of the quadratic part is not strictly upper triangular"
                )));
            }
            if row >= 1u32 << dim {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} does not fit in dimension {dim}"
                )));
            }
        }
        if lin >= 1u32 << dim {
            return Err(Error::DimensionMismatch(
                "linear part does not fit in the dimension".into(),
            ));
        }
        Ok(QuadraticForm {
            dim,
            quad,
            lin,
            const_bit,
        })
    }

    pub fn zero(dim: u32) -> Result<Self> {
        Self::new(dim, vec![0; dim as usize], 0, false)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn quad_rows(&self) -> &[u32] {
        &self.quad
    }

    pub fn lin(&self) -> u32 {
        self.lin
    }

    pub fn const_bit(&self) -> bool {
        self.const_bit
    }

    /// Evaluates sum_{i<j} q_ij v_i v_j + <lin, v> + const over F_2.
    #[inline]
    pub fn eval(&self, v: u32) -> u32 {
        let mut acc = self.const_bit as u32 ^ dot(self.lin, v);
        let mut bits = v;
        while bits != 0 {
            let i = bits.trailing_zeros();
            acc ^= dot(self.quad[i as usize], v);
            bits &= bits - 1;
        }
        acc
    }

    pub fn truth_table(&self) -> FnTable {
        FnTable::from_fn(self.dim, 1, |v| self.eval(v)).expect("dim already validated")
    }
}

/// One named inequality from the pipeline, with the exact verdict and
/// display values for both sides.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    fn new(name: &str, lhs: f64, rhs: f64, holds: bool) -> Self {
        BoundCheck {
            name: name.into(),
            lhs,
            rhs,
            holds,
        }
    }
}

/// Per-level record of the shift chain construction.
#[derive(Clone, Debug, Serialize)]
pub struct LevelStep {
    pub level: u32,
    /// The shift c_k fixed at this level (hex in reports).
    pub shift: u32,
    /// Exact density |S_k| / 2^{n(k+1)}.
    pub density: Frac,
    /// Exact density of the doubled set S' used to reach this level
    /// (absent at level 1, which needs no doubling step).
    pub sprime_density: Option<Frac>,
}

/// The shift chain c_1..c_k together with the exact density of the tuple
/// set it defines. The tuple set itself is never materialized; membership
/// is recomputed on demand from f and the shifts.
#[derive(Clone, Debug)]
pub struct LevelChain {
    f: FnTable,
    k: u32,
    shifts: Vec<u32>,
    levels: Vec<LevelStep>,
}

impl LevelChain {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn shifts(&self) -> &[u32] {
        &self.shifts
    }

    /// Exact density of S_k in (F_2^n)^{k+1}.
    pub fn density(&self) -> Frac {
        self.levels.last().expect("k >= 1").density
    }

    pub fn levels(&self) -> &[LevelStep] {
        &self.levels
    }

    /// Membership of (x, y_1..y_k): for every subset I of the directions,
    /// f(x + sum_I y_i) = f(x) + sum_I f(y_i) + sum_I c_i.
    pub fn contains(&self, x: u32, ys: &[u32]) -> bool {
        debug_assert_eq!(ys.len(), self.k as usize);
        chain_member(&self.f, &self.shifts, x, ys)
    }
}

#[inline]
fn chain_member(f: &FnTable, shifts: &[u32], x: u32, ys: &[u32]) -> bool {
    let k = shifts.len();
    let fx = f.eval(x);
    for mask in 1u32..(1 << k) {
        let mut p = x;
        let mut rhs = fx;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            p ^= ys[i];
            rhs ^= f.eval(ys[i]) ^ shifts[i];
            bits &= bits - 1;
        }
        if f.eval(p) != rhs {
            return false;
        }
    }
    true
}

/// Builds the shift chain greedily: c_1 is the most frequent value of
/// f(x+y)+f(x)+f(y); each later c_{k+1} is the most frequent value of the
/// same expression over the doubled tuple set S'. Ties break toward the
/// smallest code. The exact counted density is at least
/// (1/|Delta f|)^{2^k - 1}, and each doubling step satisfies
/// density(S') >= density(S_k)^2 exactly.
pub fn build_level_chain(f: &FnTable, k: u32) -> Result<LevelChain> {
    if !(1..=3).contains(&k) {
        return Err(Error::Infeasible(format!("target level {k} must be in 1..=3")));
    }
    let n = f.dom_dim();
    if n * (k + 1) > 28 {
        return Err(Error::ResourceLimit(format!(
            "level-{k} chain at n = {n} needs 2^{} counted tuples; feasible max n is {}",
            n * (k + 1),
            28 / (k + 1)
        )));
    }
    let m = f.codom_dim();
    let size = 1u32 << n;
    let hist_len = 1usize << m;

    // Level 1: histogram of f(x+y) + f(x) + f(y) over all pairs.
    let hist = (0..size)
        .into_par_iter()
        .fold(
            || vec![0u64; hist_len],
            |mut h, x| {
                let fx = f.eval(x);
                for y in 0..size {
                    h[(f.eval(x ^ y) ^ fx ^ f.eval(y)) as usize] += 1;
                }
                h
            },
        )
        .reduce(|| vec![0u64; hist_len], merge_hist);
    let (c1, count1) = argmax_hist(&hist);
    let mut shifts = vec![c1];
    let mut levels = vec![LevelStep {
        level: 1,
        shift: c1,
        density: Frac::new(count1 as u128, 1u128 << (2 * n)),
        sprime_density: None,
    }];

    for level in 2..=k {
        let prev_shifts = shifts.clone();
        let inner = 1u64 << (n * level);
        let mask = (1u64 << n) - 1;
        let (hist, sprime_count) = (0..size)
            .into_par_iter()
            .fold(
                || (vec![0u64; hist_len], 0u64),
                |(mut h, mut sp), x| {
                    let fx = f.eval(x);
                    let mut ys = vec![0u32; level as usize];
                    for t in 0..inner {
                        for (i, y) in ys.iter_mut().enumerate() {
                            *y = ((t >> (n as u64 * i as u64)) & mask) as u32;
                        }
                        let y_new = ys[level as usize - 1];
                        let head = &ys[..level as usize - 1];
                        if chain_member(f, &prev_shifts, x, head)
                            && chain_member(f, &prev_shifts, x ^ y_new, head)
                        {
                            sp += 1;
                            h[(f.eval(x ^ y_new) ^ fx ^ f.eval(y_new)) as usize] += 1;
                        }
                    }
                    (h, sp)
                },
            )
            .reduce(
                || (vec![0u64; hist_len], 0u64),
                |(ha, sa), (hb, sb)| (merge_hist(ha, hb), sa + sb),
            );
        let (c, count) = argmax_hist(&hist);
        shifts.push(c);
        let denom = 1u128 << (n as u128 * (level as u128 + 1));
        levels.push(LevelStep {
            level,
            shift: c,
            density: Frac::new(count as u128, denom),
            sprime_density: Some(Frac::new(sprime_count as u128, denom)),
        });
    }

    Ok(LevelChain {
        f: f.clone(),
        k,
        shifts,
        levels,
    })
}

fn merge_hist(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(&b) {
        *x += y;
    }
    a
}

fn argmax_hist(hist: &[u64]) -> (u32, u64) {
    let mut best = (0u32, 0u64);
    for (v, &c) in hist.iter().enumerate() {
        if c > best.1 {
            best = (v as u32, c);
        }
    }
    best
}

/// Lifts f: F_2^n -> F_2^m to the Boolean form F(x, z) = <f(x), z> on
/// F_2^{n+m}; the point (x, z) is encoded with x in the low n bits.
pub fn lift_inner_product(f: &FnTable) -> Result<FnTable> {
    let n = f.dom_dim();
    let m = f.codom_dim();
    if n + m > crate::gf2::MAX_DIM {
        return Err(Error::InvalidDimension {
            dim: n + m,
            max: crate::gf2::MAX_DIM,
        });
    }
    let xmask = (1u32 << n) - 1;
    FnTable::from_fn(n + m, 1, |code| dot(f.eval(code & xmask), code >> n))
}

/// The four alternating sums tested by the U^3 lifting identity, at one
/// tuple (x, y1, y2, y3).
#[inline]
pub fn a_system_values(f: &FnTable, x: u32, y1: u32, y2: u32, y3: u32) -> [u32; 4] {
    let f0 = f.eval(x);
    let f1 = f.eval(x ^ y1);
    let f2 = f.eval(x ^ y2);
    let f3 = f.eval(x ^ y3);
    let f12 = f.eval(x ^ y1 ^ y2);
    let f13 = f.eval(x ^ y1 ^ y3);
    let f23 = f.eval(x ^ y2 ^ y3);
    let f123 = f.eval(x ^ y1 ^ y2 ^ y3);
    [
        f0 ^ f1 ^ f2 ^ f3 ^ f12 ^ f13 ^ f23 ^ f123,
        f1 ^ f12 ^ f13 ^ f123,
        f2 ^ f12 ^ f23 ^ f123,
        f3 ^ f13 ^ f23 ^ f123,
    ]
}

/// Exact probability, over all 2^{4n} tuples, that all four alternating
/// sums vanish. Equals U^3 of the lifted form raised to the 8th power.
/// O(2^{4n}): feasible up to n = 7.
pub fn a_system_probability(f: &FnTable) -> Result<Frac> {
    let n = f.dom_dim();
    if 4 * n > 28 {
        return Err(Error::ResourceLimit(format!(
            "A-system count at n = {n} is a 2^{} loop; feasible max n is 7",
            4 * n
        )));
    }
    let size = 1u32 << n;
    let count: u64 = (0..size)
        .into_par_iter()
        .map(|x| {
            let mut local = 0u64;
            for y1 in 0..size {
                for y2 in 0..size {
                    for y3 in 0..size {
                        if a_system_values(f, x, y1, y2, y3) == [0, 0, 0, 0] {
                            local += 1;
                        }
                    }
                }
            }
            local
        })
        .sum();
    Ok(Frac::new(count as u128, 1u128 << (4 * n)))
}

/// Exhaustively maximizes agreement with g over all quadratics on N <= 6
/// variables. Ties break toward the lexicographically smallest
/// (quad, lin, const) bit encoding: quadratic coefficients are packed in
/// row-major pair order (0,1), (0,2), .., (N-2,N-1).
pub fn best_quadratic_exhaustive(g: &FnTable) -> Result<(QuadraticForm, Frac)> {
    if g.codom_dim() != 1 {
        return Err(Error::NotBoolean { m: g.codom_dim() });
    }
    let n = g.dom_dim();
    if n > MAX_EXHAUSTIVE_QUADRATIC_DIM {
        return Err(Error::ResourceLimit(format!(
            "exhaustive quadratic search is limited to N <= {MAX_EXHAUSTIVE_QUADRATIC_DIM}, got N = {n}"
        )));
    }
    let npts = 1u32 << n;
    let gbits: u64 = g
        .table()
        .iter()
        .enumerate()
        .fold(0u64, |acc, (v, &b)| acc | ((b as u64) << v));

    // Truth-table masks of the monomials.
    let pairs: Vec<(u32, u32)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let pair_masks: Vec<u64> = pairs
        .iter()
        .map(|&(i, j)| table_mask(npts, |v| (v >> i) & (v >> j) & 1))
        .collect();
    let mut lc_masks: Vec<u64> = (0..n)
        .map(|i| table_mask(npts, |v| (v >> i) & 1))
        .collect();
    lc_masks.push(table_mask(npts, |_| 1)); // constant bit

    let p = pairs.len() as u32;
    let quad_space = 1u64 << p;
    let lc_space = 1u32 << (n + 1);

    // Candidate ranked by (agreement, smallest encoding).
    #[derive(Clone, Copy)]
    struct Best {
        agreement: u32,
        quad_enc: u32,
        lin_enc: u32,
        const_bit: bool,
    }
    fn better(a: &Best, b: &Best) -> bool {
        (
            a.agreement,
            std::cmp::Reverse((a.quad_enc, a.lin_enc, a.const_bit)),
        ) > (
            b.agreement,
            std::cmp::Reverse((b.quad_enc, b.lin_enc, b.const_bit)),
        )
    }

    let chunk = 1u64 << 12;
    let ranges: Vec<u64> = (0..quad_space).step_by(chunk as usize).collect();
    let best = ranges
        .into_par_iter()
        .map(|start| {
            let end = (start + chunk).min(quad_space);
            // Build the table for gray(start) directly, then walk.
            let mut qenc = gray(start);
            let mut qtab = apply_mask_bits(qenc, &pair_masks);
            let mut best: Option<Best> = None;
            let mut idx = start;
            loop {
                // Walk the linear/constant space in Gray order on top of qtab.
                let mut lenc = 0u32;
                let mut t = qtab;
                for li in 0..(lc_space as u64) {
                    if li > 0 {
                        let flip = li.trailing_zeros();
                        lenc ^= 1 << flip;
                        t ^= lc_masks[flip as usize];
                    }
                    let diff = (t ^ gbits) & low_bits(npts);
                    let agreement = npts - diff.count_ones();
                    let cand = Best {
                        agreement,
                        quad_enc: qenc,
                        lin_enc: lenc & !(1 << n),
                        const_bit: (lenc >> n) & 1 == 1,
                    };
                    if best.as_ref().is_none_or(|b| better(&cand, b)) {
                        best = Some(cand);
                    }
                }
                idx += 1;
                if idx >= end {
                    break;
                }
                let flip = idx.trailing_zeros();
                qenc ^= 1 << flip;
                qtab ^= pair_masks[flip as usize];
            }
            best.expect("nonempty range")
        })
        .reduce_with(|a, b| if better(&a, &b) { a } else { b })
        .expect("nonempty search space");

    let mut quad = vec![0u32; n as usize];
    for (t, &(i, j)) in pairs.iter().enumerate() {
        if (best.quad_enc >> t) & 1 == 1 {
            quad[i as usize] |= 1 << j;
        }
    }
    let form = QuadraticForm::new(n, quad, best.lin_enc, best.const_bit)?;
    Ok((form, Frac::new(best.agreement as u128, npts as u128)))
}

fn table_mask(npts: u32, f: impl Fn(u32) -> u32) -> u64 {
    (0..npts).fold(0u64, |acc, v| acc | (((f(v) & 1) as u64) << v))
}

fn apply_mask_bits(enc: u32, masks: &[u64]) -> u64 {
    let mut acc = 0u64;
    let mut bits = enc;
    while bits != 0 {
        let t = bits.trailing_zeros();
        acc ^= masks[t as usize];
        bits &= bits - 1;
    }
    acc
}

fn gray(i: u64) -> u32 {
    (i ^ (i >> 1)) as u32
}

fn low_bits(npts: u32) -> u64 {
    if npts >= 64 {
        u64::MAX
    } else {
        (1u64 << npts) - 1
    }
}

/// Measured agreement of a quadratic with a Boolean table.
pub fn quadratic_agreement(g: &FnTable, q: &QuadraticForm) -> Result<Frac> {
    if g.codom_dim() != 1 {
        return Err(Error::NotBoolean { m: g.codom_dim() });
    }
    if g.dom_dim() != q.dim() {
        return Err(Error::DimensionMismatch(
            "quadratic and table dimensions differ".into(),
        ));
    }
    let matches = (0..g.dom_size() as u32)
        .filter(|&v| g.eval(v) == q.eval(v))
        .count();
    Ok(Frac::new(matches as u128, g.dom_size() as u128))
}

/// Isolates the bilinear cross term of Q(x, z) (x in the low n bits) as an
/// n x m matrix by second differences:
/// A_ij = Q(e_i, e_j) + Q(e_i, 0) + Q(0, e_j) + Q(0, 0).
pub fn extract_bilinear(q: &QuadraticForm, n: u32, m: u32) -> Result<BitMatrix> {
    if n + m != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "n + m = {} does not match the quadratic dimension {}",
            n + m,
            q.dim()
        )));
    }
    let q00 = q.eval(0);
    let mut a = BitMatrix::zero(n, m)?;
    for i in 0..n {
        let qi0 = q.eval(1 << i);
        for j in 0..m {
            let q0j = q.eval(1 << (n + j));
            let qij = q.eval((1 << i) | (1 << (n + j)));
            a.set(i, j, (qij ^ qi0 ^ q0j ^ q00) == 1);
        }
    }
    Ok(a)
}

/// Exact histogram of f(x) + x^T A over all x; returns the most frequent
/// value (smallest code on ties) and its exact frequency.
pub fn linear_shift_agreement(f: &FnTable, a: &BitMatrix) -> Result<(u32, Frac)> {
    if a.rows() != f.dom_dim() || a.cols() != f.codom_dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, function needs {}x{}",
            a.rows(),
            a.cols(),
            f.dom_dim(),
            f.codom_dim()
        )));
    }
    let hist_len = 1usize << f.codom_dim();
    let mut hist = vec![0u64; hist_len];
    for x in 0..f.dom_size() as u32 {
        hist[(f.eval(x) ^ a.mul_row_vector(x)) as usize] += 1;
    }
    let (c, count) = argmax_hist(&hist);
    Ok((c, Frac::new(count as u128, f.dom_size() as u128)))
}

/// The full decomposition record, with every bound the pipeline asserts.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    /// The linear map as an m x n matrix (row j = the x-mask producing
    /// output bit j), serialized as hex rows.
    #[serde(serialize_with = "ser_matrix_rows")]
    pub ell: BitMatrix,
    #[serde(serialize_with = "ser_hex")]
    pub shift_c: u32,
    pub agreement_eps: Frac,
    pub error_image_size: u64,
    pub k_delta: u64,
    pub cover_size: u64,
    /// K_Delta^2 / eps.
    pub bound: Frac,
    pub u3_norm: Option<f64>,
    pub oracle_agreement: Option<Frac>,
    pub checks: Vec<BoundCheck>,
}

fn ser_matrix_rows<S: Serializer>(m: &BitMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.rows() as usize))?;
    for &row in m.row_masks() {
        seq.serialize_element(&format!("{row:x}"))?;
    }
    seq.end()
}

fn ser_hex<S: Serializer>(v: &u32, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("{v:x}"))
}

impl DecompositionReport {
    pub fn all_bounds_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// The covering argument: T = {x : f(x) = l(x) + c}; B collects translate
/// representatives greedily by ascending code, keeping T + b pairwise
/// disjoint; maximality puts every point in T + T + B, and the error image
/// lands inside Delta f + Delta f + B' where B' = {f(b) + l(b)}.
pub fn covering_decomposition(
    f: &FnTable,
    a: &BitMatrix,
    shift_c: u32,
) -> Result<DecompositionReport> {
    let n = f.dom_dim();
    let m = f.codom_dim();
    if a.rows() != n || a.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, function needs {}x{}",
            a.rows(),
            a.cols(),
            n,
            m
        )));
    }
    let size = 1u32 << n;
    let ell: Vec<u32> = (0..size).map(|x| a.mul_row_vector(x)).collect();

    let mut t_set = SubsetF2n::empty(n)?;
    for x in 0..size {
        if f.eval(x) ^ ell[x as usize] == shift_c {
            t_set.insert(x);
        }
    }
    if t_set.is_empty() {
        return Err(Error::DegenerateAgreement);
    }
    let t_codes = t_set.codes();
    let eps = Frac::new(t_set.len() as u128, size as u128);

    // Greedy maximal packing of translates of T.
    let mut union = SubsetF2n::empty(n)?;
    let mut b_list: Vec<u32> = Vec::new();
    for b in 0..size {
        if t_codes.iter().all(|&t| !union.contains(t ^ b)) {
            for &t in &t_codes {
                union.insert(t ^ b);
            }
            b_list.push(b);
        }
    }

    let delta = difference_set(f);
    let k_delta = delta.size();

    // Error image {f(x) + l(x)} and the covering set Delta + Delta + B'.
    let mut error_image = SubsetF2n::empty(m)?;
    for x in 0..size {
        error_image.insert(f.eval(x) ^ ell[x as usize]);
    }
    let mut cover_vals = SubsetF2n::empty(m)?;
    for &d1 in &delta.values {
        for &d2 in &delta.values {
            for &b in &b_list {
                cover_vals.insert(d1 ^ d2 ^ f.eval(b) ^ ell[b as usize]);
            }
        }
    }
    let mut outside = error_image.clone();
    for c in cover_vals.codes() {
        outside.remove(c);
    }
    let contained = error_image
        .codes()
        .iter()
        .all(|&e| cover_vals.contains(e));

    // T + T + B covers the space (forced by maximality of B).
    let two_t = sumset(&t_set)?;
    let mut covered = SubsetF2n::empty(n)?;
    for &b in &b_list {
        covered.union_with(&two_t.translate(b));
    }

    let translates_disjoint = union.len() == b_list.len() as u64 * t_set.len();
    let b_bound_holds = b_list.len() as u128 * t_set.len() as u128 <= size as u128;
    let image_bound_holds =
        error_image.len() as u128 * t_set.len() as u128 <= (k_delta as u128).pow(2) * size as u128;
    let bound = Frac::new((k_delta as u128).pow(2) * size as u128, t_set.len() as u128);

    let checks = vec![
        BoundCheck::new(
            "cover_translates_pairwise_disjoint",
            union.len() as f64,
            (b_list.len() as u64 * t_set.len()) as f64,
            translates_disjoint,
        ),
        BoundCheck::new(
            "cover_size_at_most_inverse_eps",
            b_list.len() as f64,
            1.0 / eps.to_f64(),
            b_bound_holds,
        ),
        BoundCheck::new(
            "translates_of_2t_cover_space",
            covered.len() as f64,
            size as f64,
            covered.len() == size as u64,
        ),
        BoundCheck::new(
            "error_image_inside_delta_delta_bprime",
            outside.len() as f64,
            0.0,
            contained,
        ),
        BoundCheck::new(
            "error_image_size_at_most_k2_over_eps",
            error_image.len() as f64,
            bound.to_f64(),
            image_bound_holds,
        ),
    ];

    Ok(DecompositionReport {
        ell: a.transpose(),
        shift_c,
        agreement_eps: eps,
        error_image_size: error_image.len(),
        k_delta,
        cover_size: b_list.len() as u64,
        bound,
        u3_norm: None,
        oracle_agreement: None,
        checks,
    })
}

/// The whole pipeline with the built-in exhaustive oracle (n + m <= 6).
pub fn pfr_decompose(f: &FnTable) -> Result<DecompositionReport> {
    pfr_decompose_with(f, None)
}

/// The pipeline with an optional externally supplied quadratic, which
/// lifts the exhaustive-search size limit.
pub fn pfr_decompose_with(
    f: &FnTable,
    supplied: Option<QuadraticForm>,
) -> Result<DecompositionReport> {
    let n = f.dom_dim();
    let m = f.codom_dim();
    let big_n = n + m;
    if supplied.is_none() && big_n > MAX_EXHAUSTIVE_QUADRATIC_DIM {
        return Err(Error::ResourceLimit(format!(
            "pipeline with the exhaustive oracle needs n + m <= {MAX_EXHAUSTIVE_QUADRATIC_DIM}, \
             got {big_n}; supply a quadratic to lift the limit"
        )));
    }
    let lifted = lift_inner_product(f)?;
    let k_delta = difference_set(f).size();

    // U^3 lower bound of the lifted form, proved through the level chain.
    let mut checks = Vec::new();
    let mut u3_norm = None;
    if let Ok(preroot) = gowers_preroot_exact(&lifted, 3) {
        let denom_log2 = 4 * big_n;
        let value = (preroot as f64 / 2f64.powi(denom_log2 as i32)).powf(1.0 / 8.0);
        u3_norm = Some(value);
        // value >= K^{-7/8}  <=>  preroot * K^7 >= 2^{4N}, checked exactly.
        let holds = BigUint::from(preroot) * BigUint::from(k_delta).pow(7)
            >= BigUint::from(1u32) << denom_log2;
        checks.push(BoundCheck::new(
            "u3_of_lift_at_least_kdelta_pow_neg_7_8",
            value,
            (k_delta as f64).powf(-7.0 / 8.0),
            holds,
        ));
    }

    let (q, oracle_agreement) = match supplied {
        Some(q) => {
            if q.dim() != big_n {
                return Err(Error::DimensionMismatch(format!(
                    "supplied quadratic has dimension {}, lift needs {big_n}",
                    q.dim()
                )));
            }
            let agr = quadratic_agreement(&lifted, &q)?;
            (q, agr)
        }
        None => best_quadratic_exhaustive(&lifted)?,
    };
    checks.push(BoundCheck::new(
        "oracle_agreement_above_half",
        oracle_agreement.to_f64(),
        0.5,
        oracle_agreement >= Frac::new(1, 2),
    ));

    let a = extract_bilinear(&q, n, m)?;
    let (shift_c, agreement_eps) = linear_shift_agreement(f, &a)?;

    // agreement >= eps_oracle^4 / K_Delta, checked exactly.
    let eps_oracle = Frac::new(2, 1) * oracle_agreement;
    let eps_oracle = eps_oracle.saturating_sub(Frac::one());
    let lemma_lhs = BigUint::from(agreement_eps.num())
        * BigUint::from(eps_oracle.den()).pow(4)
        * BigUint::from(k_delta);
    let lemma_rhs = BigUint::from(eps_oracle.num()).pow(4) * BigUint::from(agreement_eps.den());
    checks.push(BoundCheck::new(
        "shift_agreement_at_least_eps4_over_k",
        agreement_eps.to_f64(),
        eps_oracle.to_f64().powi(4) / k_delta as f64,
        lemma_lhs >= lemma_rhs,
    ));

    let mut report = covering_decomposition(f, &a, shift_c)?;
    checks.append(&mut report.checks);
    report.checks = checks;
    report.u3_norm = u3_norm;
    report.oracle_agreement = Some(oracle_agreement);
    Ok(report)
}
