//! Bit-packed representations of points, subsets, and functions over F_2^n,
//! together with the sumset / span / doubling / difference-set / derivative
//! primitives everything else is built on.
//!
//! Encoding convention (used by every file format and tie-break in the
//! crate): points are little-endian integer codes, bit `j` of the code is
//! coordinate `j`. Addition over F_2^n is XOR of codes.

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frac::Frac;

/// Hard cap on point and table dimensions: truth tables with 2^24 entries
/// stay comfortably in memory, anything larger does not.
pub const MAX_DIM: u32 = 24;

/// Subsets alone stretch to 2n = 26 so that pair sets (y, l^(y)) over
/// F_2^{2n} exist at the derivative-profile cap n = 13.
pub const MAX_SET_DIM: u32 = 26;

pub(crate) fn check_dim(dim: u32) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidDimension { dim, max: MAX_DIM });
    }
    Ok(())
}

pub(crate) fn check_set_dim(dim: u32) -> Result<()> {
    if dim == 0 || dim > MAX_SET_DIM {
        return Err(Error::InvalidDimension {
            dim,
            max: MAX_SET_DIM,
        });
    }
    Ok(())
}

/// A point of F_2^n: `code` is the little-endian integer encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PointF2 {
    dim: u32,
    code: u32,
}

impl PointF2 {
    pub fn new(dim: u32, code: u32) -> Result<Self> {
        check_dim(dim)?;
        if code >= (1u32 << dim) {
            return Err(Error::DimensionMismatch(format!(
                "code {code:#x} does not fit in {dim} coordinates"
            )));
        }
        Ok(PointF2 { dim, code })
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn code(&self) -> u32 {
        self.code
    }

    /// Coordinate `j` of the point.
    pub fn coord(&self, j: u32) -> bool {
        (self.code >> j) & 1 == 1
    }
}

/// Parity of the inner product <a, b> over F_2.
#[inline]
pub fn dot(a: u32, b: u32) -> u32 {
    (a & b).count_ones() & 1
}

/// A subset of F_2^n stored as a bitset of length 2^n with a cached
/// population count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetF2n {
    dim: u32,
    blocks: Vec<u64>,
    size: u64,
}

impl SubsetF2n {
    pub fn empty(dim: u32) -> Result<Self> {
        check_set_dim(dim)?;
        let nblocks = if dim < 6 { 1 } else { 1usize << (dim - 6) };
        Ok(SubsetF2n {
            dim,
            blocks: vec![0; nblocks],
            size: 0,
        })
    }

    pub fn from_codes(dim: u32, codes: &[u32]) -> Result<Self> {
        let mut s = Self::empty(dim)?;
        for &c in codes {
            if c >= (1u32 << dim) {
                return Err(Error::DimensionMismatch(format!(
                    "code {c:#x} does not fit in {dim} coordinates"
                )));
            }
            s.insert(c);
        }
        Ok(s)
    }

    /// The whole space F_2^n.
    pub fn full(dim: u32) -> Result<Self> {
        let mut s = Self::empty(dim)?;
        if dim < 6 {
            s.blocks[0] = (1u64 << (1u32 << dim)) - 1;
        } else {
            for b in s.blocks.iter_mut() {
                *b = u64::MAX;
            }
        }
        s.size = 1u64 << dim;
        Ok(s)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn contains(&self, code: u32) -> bool {
        let i = (code >> 6) as usize;
        let j = code & 63;
        (self.blocks[i] >> j) & 1 == 1
    }

    /// Inserts `code`; returns true if it was newly added.
    pub fn insert(&mut self, code: u32) -> bool {
        debug_assert!(code < (1u32 << self.dim));
        let i = (code >> 6) as usize;
        let j = code & 63;
        let bit = 1u64 << j;
        if self.blocks[i] & bit == 0 {
            self.blocks[i] |= bit;
            self.size += 1;
            true
        } else {
            false
        }
    }

    pub fn remove(&mut self, code: u32) -> bool {
        let i = (code >> 6) as usize;
        let j = code & 63;
        let bit = 1u64 << j;
        if self.blocks[i] & bit != 0 {
            self.blocks[i] &= !bit;
            self.size -= 1;
            true
        } else {
            false
        }
    }

    /// In-place union. Both sets must share a dimension.
    pub fn union_with(&mut self, other: &SubsetF2n) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
        self.recount();
    }

    /// In-place intersection.
    pub fn intersect_with(&mut self, other: &SubsetF2n) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
        self.recount();
    }

    pub fn intersects(&self, other: &SubsetF2n) -> bool {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .any(|(a, b)| a & b != 0)
    }

    fn recount(&mut self) {
        self.size = self.blocks.iter().map(|b| b.count_ones() as u64).sum();
    }

    /// Member codes in ascending order.
    pub fn codes(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.size as usize);
        for (i, &block) in self.blocks.iter().enumerate() {
            let mut b = block;
            while b != 0 {
                let j = b.trailing_zeros();
                out.push(((i as u32) << 6) | j);
                b &= b - 1;
            }
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().enumerate().flat_map(|(i, &block)| {
            std::iter::successors(
                if block == 0 { None } else { Some(block) },
                |b| {
                    let b = b & (b - 1);
                    if b == 0 {
                        None
                    } else {
                        Some(b)
                    }
                },
            )
            .map(move |b| ((i as u32) << 6) | b.trailing_zeros())
        })
    }

    /// Smallest member code, if any.
    pub fn min_code(&self) -> Option<u32> {
        for (i, &block) in self.blocks.iter().enumerate() {
            if block != 0 {
                return Some(((i as u32) << 6) | block.trailing_zeros());
            }
        }
        None
    }

    /// The translate `self + t = {s XOR t : s in self}`.
    pub fn translate(&self, t: u32) -> SubsetF2n {
        let mut out = SubsetF2n::empty(self.dim).expect("dim already validated");
        for c in self.codes() {
            out.insert(c ^ t);
        }
        out
    }
}

/// A function f: F_2^n -> F_2^m as a dense truth table; entry `i` is the
/// codomain code of f at the domain point with code `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnTable {
    dom_dim: u32,
    codom_dim: u32,
    table: Vec<u32>,
}

impl FnTable {
    pub fn new(dom_dim: u32, codom_dim: u32, table: Vec<u32>) -> Result<Self> {
        check_dim(dom_dim)?;
        check_dim(codom_dim)?;
        if table.len() != 1usize << dom_dim {
            return Err(Error::DimensionMismatch(format!(
                "table has {} entries, expected 2^{} = {}",
                table.len(),
                dom_dim,
                1usize << dom_dim
            )));
        }
        let bound = 1u32 << codom_dim;
        if let Some(bad) = table.iter().position(|&v| v >= bound) {
            return Err(Error::DimensionMismatch(format!(
                "entry {bad} is {:#x}, not below 2^{codom_dim}",
                table[bad]
            )));
        }
        Ok(FnTable {
            dom_dim,
            codom_dim,
            table,
        })
    }

    pub fn from_fn(dom_dim: u32, codom_dim: u32, mut f: impl FnMut(u32) -> u32) -> Result<Self> {
        check_dim(dom_dim)?;
        let table = (0u32..1 << dom_dim).map(&mut f).collect();
        Self::new(dom_dim, codom_dim, table)
    }

    pub fn dom_dim(&self) -> u32 {
        self.dom_dim
    }

    pub fn codom_dim(&self) -> u32 {
        self.codom_dim
    }

    pub fn dom_size(&self) -> usize {
        self.table.len()
    }

    #[inline]
    pub fn eval(&self, x: u32) -> u32 {
        self.table[x as usize]
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    /// Pointwise XOR of two tables over the same spaces.
    pub fn xor(&self, other: &FnTable) -> Result<FnTable> {
        if self.dom_dim != other.dom_dim || self.codom_dim != other.codom_dim {
            return Err(Error::DimensionMismatch(
                "tables live over different spaces".into(),
            ));
        }
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| a ^ b)
            .collect();
        FnTable::new(self.dom_dim, self.codom_dim, table)
    }
}

/// A GF(2) matrix with up to 24 rows and columns; row `i` is stored as the
/// bitmask of its entries (bit `j` = entry `(i, j)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: u32,
    cols: u32,
    row_masks: Vec<u32>,
}

impl BitMatrix {
    pub fn zero(rows: u32, cols: u32) -> Result<Self> {
        check_dim(rows)?;
        check_dim(cols)?;
        Ok(BitMatrix {
            rows,
            cols,
            row_masks: vec![0; rows as usize],
        })
    }

    pub fn from_rows(cols: u32, row_masks: Vec<u32>) -> Result<Self> {
        check_dim(cols)?;
        check_dim(row_masks.len() as u32)?;
        if let Some(&bad) = row_masks.iter().find(|&&r| r >= (1u32 << cols)) {
            return Err(Error::DimensionMismatch(format!(
                "row mask {bad:#x} does not fit in {cols} columns"
            )));
        }
        Ok(BitMatrix {
            rows: row_masks.len() as u32,
            cols,
            row_masks,
        })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn row(&self, i: u32) -> u32 {
        self.row_masks[i as usize]
    }

    pub fn row_masks(&self) -> &[u32] {
        &self.row_masks
    }

    pub fn get(&self, i: u32, j: u32) -> bool {
        (self.row_masks[i as usize] >> j) & 1 == 1
    }

    pub fn set(&mut self, i: u32, j: u32, v: bool) {
        if v {
            self.row_masks[i as usize] |= 1 << j;
        } else {
            self.row_masks[i as usize] &= !(1 << j);
        }
    }

    /// Row-vector action `x^T A`: XOR of the rows selected by the bits of
    /// `x`. `x` has `rows` coordinates, the result has `cols`.
    #[inline]
    pub fn mul_row_vector(&self, x: u32) -> u32 {
        let mut acc = 0;
        let mut bits = x;
        while bits != 0 {
            let i = bits.trailing_zeros();
            acc ^= self.row_masks[i as usize];
            bits &= bits - 1;
        }
        acc
    }

    /// Column-vector action `A y`: bit `i` of the result is `<row_i, y>`.
    /// `y` has `cols` coordinates, the result has `rows`.
    #[inline]
    pub fn mul_col_vector(&self, y: u32) -> u32 {
        let mut acc = 0;
        for (i, &row) in self.row_masks.iter().enumerate() {
            acc |= dot(row, y) << i;
        }
        acc
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zero(self.cols, self.rows).expect("dims already validated");
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    t.set(j, i, true);
                }
            }
        }
        t
    }
}

/// Exact statistics of a set: its doubling constant and the classical
/// span bounds reported as reference lines next to it.
#[derive(Clone, Debug)]
pub struct SetStats {
    pub size: u64,
    pub sumset_size: u64,
    /// Exact doubling constant K = |S+S| / |S|.
    pub doubling: Frac,
    pub span_size: u64,
    /// Reference line ceil(K^2 * 2^ceil(K^4) * |S|). The exponent K^4 is
    /// rounded up to the next integer so the value stays an integer, and
    /// the field is omitted entirely once the exponent exceeds 2^16 (the
    /// number would not fit in memory); `ruzsa_bound_log2` is always set.
    pub ruzsa_bound: Option<BigUint>,
    pub ruzsa_bound_log2: f64,
    /// Reference line 2K, the exponent of the sharp span bound with its
    /// o(1) term dropped.
    pub greentao_exponent: Frac,
}

/// The difference set of f: all values f(x+y) - f(x) - f(y) (XOR over F_2),
/// stored as ascending codomain codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffSet {
    pub codom_dim: u32,
    pub values: Vec<u32>,
}

impl DiffSet {
    pub fn size(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn contains(&self, v: u32) -> bool {
        self.values.binary_search(&v).is_ok()
    }
}

/// The sumset S + S = {a XOR b : a, b in S}.
///
/// Pair enumeration, O(|S|^2) with an early exit once the output saturates;
/// fine for the desk-scale sets this crate targets (|S| up to a few tens of
/// thousands), quadratic beyond that.
pub fn sumset(s: &SubsetF2n) -> Result<SubsetF2n> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let codes = s.codes();
    let mut out = SubsetF2n::empty(s.dim())?;
    let space = 1u64 << s.dim();
    'outer: for (i, &a) in codes.iter().enumerate() {
        for &b in &codes[i..] {
            out.insert(a ^ b);
            if out.len() == space {
                break 'outer;
            }
        }
    }
    Ok(out)
}

/// Extracts a basis of S by Gaussian elimination (echelon by leading bit).
pub fn basis_of(s: impl IntoIterator<Item = u32>) -> Vec<u32> {
    let mut basis: Vec<u32> = Vec::new();
    for v in s {
        let r = reduce_by_basis(v, &basis);
        if r != 0 {
            basis.push(r);
            basis.sort_unstable_by_key(|b| std::cmp::Reverse(*b));
        }
    }
    basis
}

/// Reduces `v` against an echelon basis sorted by descending leading bit.
pub fn reduce_by_basis(mut v: u32, basis: &[u32]) -> u32 {
    for &b in basis {
        let lead = 31 - b.leading_zeros();
        if (v >> lead) & 1 == 1 {
            v ^= b;
        }
    }
    v
}

/// The linear span of S over F_2, with span(empty) = {0} (the empty XOR
/// combination).
pub fn span(s: &SubsetF2n) -> SubsetF2n {
    let basis = basis_of(s.codes());
    span_of_basis(s.dim(), &basis)
}

/// Enumerates the span of an independent basis as a subset (Gray-code walk,
/// one XOR per element).
pub fn span_of_basis(dim: u32, basis: &[u32]) -> SubsetF2n {
    let mut out = SubsetF2n::empty(dim).expect("dim already validated");
    let r = basis.len();
    let mut acc = 0u32;
    out.insert(0);
    for i in 1u64..(1u64 << r) {
        acc ^= basis[i.trailing_zeros() as usize];
        out.insert(acc);
    }
    out
}

/// Exact doubling / span statistics of a nonempty set.
pub fn set_stats(s: &SubsetF2n) -> Result<SetStats> {
    let sum = sumset(s)?;
    let sp = span(s);
    let size = s.len();
    let sumset_size = sum.len();
    debug_assert!(size <= sumset_size && sumset_size <= size * size.max(1));
    let doubling = Frac::new(sumset_size as u128, size as u128);
    let (p, q) = (doubling.num(), doubling.den());
    // ceil(K^4) with K = p/q; p <= 2^24 so p^4 fits u128.
    let k4_ceil = (p.pow(4) + q.pow(4) - 1) / q.pow(4);
    let ruzsa_bound = if k4_ceil <= 1 << 16 {
        let num = BigUint::from(p) * BigUint::from(p) * BigUint::from(size)
            << (k4_ceil as u64);
        let den = BigUint::from(q) * BigUint::from(q);
        Some((num + &den - BigUint::from(1u32)) / den)
    } else {
        None
    };
    let kf = doubling.to_f64();
    let ruzsa_bound_log2 = 2.0 * kf.log2() + kf.powi(4) + (size as f64).log2();
    Ok(SetStats {
        size,
        sumset_size,
        doubling,
        span_size: sp.len(),
        ruzsa_bound,
        ruzsa_bound_log2,
        greentao_exponent: Frac::new(2 * sumset_size as u128, size as u128),
    })
}

/// The difference set of f, exact over all 2^{2n} pairs. O(4^n): feasible
/// up to n = 12 or so.
pub fn difference_set(f: &FnTable) -> DiffSet {
    let n = f.dom_dim();
    let m = f.codom_dim();
    let size = 1u32 << n;
    let seen = (0..size)
        .into_par_iter()
        .fold(
            || vec![0u64; diff_blocks(m)],
            |mut acc, x| {
                let fx = f.eval(x);
                for y in x..size {
                    let v = f.eval(x ^ y) ^ fx ^ f.eval(y);
                    acc[(v >> 6) as usize] |= 1u64 << (v & 63);
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; diff_blocks(m)],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x |= y;
                }
                a
            },
        );
    let mut values = Vec::new();
    for (i, &block) in seen.iter().enumerate() {
        let mut b = block;
        while b != 0 {
            let j = b.trailing_zeros();
            values.push(((i as u32) << 6) | j);
            b &= b - 1;
        }
    }
    DiffSet {
        codom_dim: m,
        values,
    }
}

fn diff_blocks(m: u32) -> usize {
    if m < 6 {
        1
    } else {
        1usize << (m - 6)
    }
}

/// The derivative f_y(x) = f(x + y) + f(x).
pub fn derivative(f: &FnTable, y: PointF2) -> Result<FnTable> {
    if y.dim() != f.dom_dim() {
        return Err(Error::DimensionMismatch(format!(
            "direction lives in F_2^{}, function domain is F_2^{}",
            y.dim(),
            f.dom_dim()
        )));
    }
    Ok(derivative_raw(f, y.code()))
    }

/// Derivative by a raw code; the caller guarantees `y < 2^n`.
pub(crate) fn derivative_raw(f: &FnTable, y: u32) -> FnTable {
    let table = (0u32..f.dom_size() as u32)
        .map(|x| f.eval(x ^ y) ^ f.eval(x))
        .collect();
    FnTable::new(f.dom_dim(), f.codom_dim(), table).expect("derivative preserves dims")
}

/// The iterated derivative f_{y_1,...,y_d}, computed by folding
/// single-direction derivatives. Equal to the direct 2^d-term XOR sum and
/// independent of the order of the directions.
pub fn iterated_derivative(f: &FnTable, ys: &[PointF2]) -> Result<FnTable> {
    if ys.is_empty() {
        return Err(Error::DimensionMismatch(
            "need at least one direction".into(),
        ));
    }
    let mut cur = derivative(f, ys[0])?;
    for &y in &ys[1..] {
        cur = derivative(&cur, y)?;
    }
    Ok(cur)
}

/// Whether S is an affine subspace: translate by any member and test
/// closure under XOR. Doubling 1 is equivalent to this.
pub fn is_affine_subspace(s: &SubsetF2n) -> bool {
    let Some(s0) = s.min_code() else {
        return false;
    };
    if !s.len().is_power_of_two() {
        return false;
    }
    let t: Vec<u32> = s.codes().iter().map(|c| c ^ s0).collect();
    let tset = SubsetF2n::from_codes(s.dim(), &t).expect("translate stays in space");
    for (i, &a) in t.iter().enumerate() {
        for &b in &t[i..] {
            if !tset.contains(a ^ b) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn naive_sumset(codes: &[u32]) -> HashSet<u32> {
        let mut out = HashSet::new();
        for &a in codes {
            for &b in codes {
                out.insert(a ^ b);
            }
        }
        out
    }

    #[test]
    fn sumset_of_subspace_is_itself() {
        let s = SubsetF2n::from_codes(2, &[0b00, 0b01, 0b10, 0b11]).unwrap();
        let sum = sumset(&s).unwrap();
        assert_eq!(sum, s);
        let stats = set_stats(&s).unwrap();
        assert_eq!(stats.doubling, Frac::one());
    }

    #[test]
    fn sumset_of_independent_points() {
        // S = {e1, e2, e3, e4} in F_2^4: all e_i + e_j (i != j) plus 0.
        let s = SubsetF2n::from_codes(4, &[1, 2, 4, 8]).unwrap();
        let sum = sumset(&s).unwrap();
        assert_eq!(sum.len(), 7);
        let naive = naive_sumset(&[1, 2, 4, 8]);
        assert_eq!(sum.codes().into_iter().collect::<HashSet<_>>(), naive);
    }

    #[test]
    fn sumset_of_singleton_zero() {
        let s = SubsetF2n::from_codes(3, &[0]).unwrap();
        assert_eq!(sumset(&s).unwrap().codes(), vec![0]);
    }

    #[test]
    fn sumset_rejects_empty() {
        let s = SubsetF2n::empty(3).unwrap();
        assert!(matches!(sumset(&s), Err(Error::EmptySet)));
    }

    #[test]
    fn span_examples() {
        let s = SubsetF2n::from_codes(3, &[1, 2]).unwrap();
        assert_eq!(span(&s).codes(), vec![0, 1, 2, 3]);

        // Independent vectors span 2^r points.
        let s = SubsetF2n::from_codes(5, &[1, 2, 4, 8]).unwrap();
        assert_eq!(span(&s).len(), 16);

        let empty = SubsetF2n::empty(4).unwrap();
        assert_eq!(span(&empty).codes(), vec![0]);
    }

    #[test]
    fn span_is_idempotent() {
        let s = SubsetF2n::from_codes(5, &[3, 5, 17, 9]).unwrap();
        let sp = span(&s);
        assert_eq!(span(&sp), sp);
    }

    #[test]
    fn stats_of_dim3_subspace() {
        let s = span(&SubsetF2n::from_codes(4, &[1, 2, 4]).unwrap());
        let stats = set_stats(&s).unwrap();
        assert_eq!(stats.size, 8);
        assert_eq!(stats.sumset_size, 8);
        assert_eq!(stats.doubling, Frac::one());
        assert_eq!(stats.span_size, 8);
    }

    #[test]
    fn stats_of_independent_points() {
        let s = SubsetF2n::from_codes(4, &[1, 2, 4, 8]).unwrap();
        let stats = set_stats(&s).unwrap();
        assert_eq!(stats.doubling, Frac::new(7, 4));
        assert_eq!(stats.span_size, 16);
        assert_eq!(stats.greentao_exponent, Frac::new(7, 2));
    }

    #[test]
    fn stats_of_coset_union() {
        // S = V + {v1..v4} with dim V = 3 and v_i independent of V.
        let v_basis = [1u32, 2, 4];
        let reps = [8u32, 16, 32, 64];
        let v = span_of_basis(7, &v_basis);
        let mut codes = Vec::new();
        for w in v.codes() {
            for &r in &reps {
                codes.push(w ^ r);
            }
        }
        let s = SubsetF2n::from_codes(7, &codes).unwrap();
        assert_eq!(s.len(), 32);
        let stats = set_stats(&s).unwrap();
        assert_eq!(stats.span_size, 1 << 7);
        // Oracle: enumerate the sumset naively.
        let naive = naive_sumset(&s.codes());
        assert_eq!(stats.sumset_size, naive.len() as u64);
    }

    #[test]
    fn ruzsa_reference_line_on_subspace() {
        // K = 1: bound is ceil(1 * 2^1 * |S|) = 2|S|.
        let s = span(&SubsetF2n::from_codes(4, &[1, 2]).unwrap());
        let stats = set_stats(&s).unwrap();
        assert_eq!(stats.ruzsa_bound.unwrap(), BigUint::from(8u32));
    }

    #[test]
    fn difference_set_of_linear_map() {
        let rows = vec![0b101u32, 0b011, 0b110];
        let a = BitMatrix::from_rows(3, rows).unwrap();
        let f = FnTable::from_fn(3, 3, |x| a.mul_row_vector(x)).unwrap();
        let d = difference_set(&f);
        assert_eq!(d.values, vec![0]);
    }

    #[test]
    fn difference_set_of_affine_map() {
        let c = 0b101u32;
        let f = FnTable::from_fn(3, 3, |x| x ^ c).unwrap();
        let d = difference_set(&f);
        assert_eq!(d.values, vec![c]);
    }

    #[test]
    fn difference_set_of_scaled_and() {
        // f(x) = (x1 * x2) * u: the bilinear cross term takes both 0 and u.
        let u = 0b110u32;
        let f = FnTable::from_fn(3, 3, |x| {
            if x & 0b11 == 0b11 {
                u
            } else {
                0
            }
        })
        .unwrap();
        let d = difference_set(&f);
        assert_eq!(d.values, vec![0, u]);
    }

    #[test]
    fn derivative_in_zero_direction_vanishes() {
        let f = FnTable::from_fn(4, 2, |x| (x * 7 + 3) & 3).unwrap();
        let d = derivative(&f, PointF2::new(4, 0).unwrap()).unwrap();
        assert!(d.table().iter().all(|&v| v == 0));
    }

    #[test]
    fn derivative_of_product_is_other_factor() {
        // f(x) = x1 x2 (coordinates 0 and 1), y = e1: f_y(x) = x2.
        let f = FnTable::from_fn(3, 1, |x| (x & 1) & ((x >> 1) & 1)).unwrap();
        let d = derivative(&f, PointF2::new(3, 1).unwrap()).unwrap();
        let expect = FnTable::from_fn(3, 1, |x| (x >> 1) & 1).unwrap();
        assert_eq!(d, expect);
    }

    #[test]
    fn derivative_dimension_mismatch() {
        let f = FnTable::from_fn(3, 1, |x| x & 1).unwrap();
        let y = PointF2::new(4, 1).unwrap();
        assert!(matches!(
            derivative(&f, y),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn iterated_derivative_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let f = FnTable::from_fn(4, 1, |_| rng.gen_range(0..2)).unwrap();
        let ys = [PointF2::new(4, 5).unwrap(), PointF2::new(4, 9).unwrap()];
        let folded = iterated_derivative(&f, &ys).unwrap();
        // Direct 2^d-term XOR sum.
        let direct = FnTable::from_fn(4, 1, |x| {
            let mut acc = 0;
            for mask in 0u32..4 {
                let mut p = x;
                for (i, y) in ys.iter().enumerate() {
                    if (mask >> i) & 1 == 1 {
                        p ^= y.code();
                    }
                }
                acc ^= f.eval(p);
            }
            acc
        })
        .unwrap();
        assert_eq!(folded, direct);
    }

    #[test]
    fn iterated_derivative_with_duplicate_direction_vanishes() {
        let f = FnTable::from_fn(4, 1, |x| (x.count_ones() / 2) & 1).unwrap();
        let y = PointF2::new(4, 6).unwrap();
        let d = iterated_derivative(&f, &[y, y]).unwrap();
        assert!(d.table().iter().all(|&v| v == 0));
    }

    #[test]
    fn affine_subspace_detection_matches_doubling_one() {
        let coset = SubsetF2n::from_codes(4, &[5, 4, 7, 6]).unwrap(); // {1,0,3,2} + 4
        assert!(is_affine_subspace(&coset));
        assert_eq!(set_stats(&coset).unwrap().doubling, Frac::one());

        let not = SubsetF2n::from_codes(4, &[0, 1, 2, 8]).unwrap();
        assert!(!is_affine_subspace(&not));
        assert!(set_stats(&not).unwrap().doubling > Frac::one());
    }

    #[test]
    fn bitmatrix_actions() {
        let a = BitMatrix::from_rows(2, vec![0b01, 0b11, 0b10]).unwrap(); // 3x2
        // x^T A with x = e1 + e3 = rows 0 and 2.
        assert_eq!(a.mul_row_vector(0b101), 0b01 ^ 0b10);
        // A y with y = (1,1): bit i = parity(row_i).
        assert_eq!(a.mul_col_vector(0b11), 0b101);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn point_validation() {
        assert!(PointF2::new(3, 8).is_err());
        assert!(PointF2::new(0, 0).is_err());
        assert!(PointF2::new(25, 0).is_err());
        let p = PointF2::new(3, 5).unwrap();
        assert!(p.coord(0) && !p.coord(1) && p.coord(2));
    }
}
