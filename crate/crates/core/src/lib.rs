//! Computational additive combinatorics over F_2^n.
//!
//! Bit-packed sets and function tables, Walsh-Hadamard spectra, exact and
//! sampled Gowers uniformity norms, doubling and span statistics, the
//! structured-approximate-homomorphism decomposition pipeline, and an
//! instrumented inverse-U^3 demo pipeline, plus seeded generators for all
//! the planted instances the test suites use.

pub mod error;
pub mod fourier;
pub mod frac;
pub mod generators;
pub mod gf2;
pub mod gowers;
pub mod io;
pub mod pfr;
pub mod u3;
pub mod verify;

pub use error::{Error, Result};
pub use frac::Frac;
pub use gf2::{BitMatrix, DiffSet, FnTable, PointF2, SetStats, SubsetF2n};
