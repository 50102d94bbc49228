//! Flat satisfiability over GF(2).
//!
//! A k-flat in `F_2^n` is the solution set of `k` independent affine
//! constraints; an instance is a conjunction of `m` flat-avoidance
//! constraints ("x does not lie on flat j"). This crate provides:
//!
//! - dense bit-packed GF(2) linear algebra ([`gf2`]),
//! - flat construction, sampling, and canonicalization ([`flats`]),
//! - instance generation under null and planted distributions ([`model`]),
//! - closed-form moments, divergences, and sample-size thresholds ([`theory`]),
//! - exhaustive satisfiability and max-coverage oracles ([`oracle`]),
//! - a degree-k multilinear lift with a linear-algebra detector ([`lift`]),
//! - a reduction from learning parity with noise to planted instances ([`lpn`]).

pub mod error;
pub mod flats;
pub mod gf2;
pub mod lift;
pub mod lpn;
pub mod model;
pub mod oracle;
pub mod theory;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
