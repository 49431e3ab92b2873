//! A symbolic-numeric laboratory for truncated jet calculus and quantitative
//! holonomic approximation on the cube `I^m = [-1,1]^m`.
//!
//! The crate is organised in five layers:
//!
//! - [`polyjet`]: multi-index combinatorics, truncated Taylor (jet)
//!   arithmetic over exact rationals or floats, jet norms, expression
//!   fields and jet sections.
//! - [`lingeo`]: linear subspaces, principal angles, hyperplane fields and
//!   the cubical stratification of `I^k` with its almost-tangent/transverse
//!   face classification.
//! - [`primitive`]: primitive sections, the power-sum decomposition of
//!   top-order sections, and jet pullback/pushforward along diffeomorphisms.
//! - [`localmodels`]: smooth profiles, the wiggle isotopy `F_t`, the
//!   transversality adjustment, the transverse local model and its
//!   parametric version, and the induction over primitive summands.
//! - [`verify`]: bound checkers and scaling-law sweeps that turn the
//!   quantitative estimates into reproducible grid measurements.

pub mod error;
pub mod grid;
pub mod lingeo;
pub mod localmodels;
pub mod polyjet;
pub mod primitive;
pub mod verify;

pub use error::{Error, Result};
