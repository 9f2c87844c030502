//! Exact and empirical densities for level raising within a congruence
//! family of weight-2 newforms, and the local factors that decide whether
//! the Iwasawa λ-invariant stays put or grows.
//!
//! The pipeline runs bottom-up:
//!
//! - [`ffmat`] and [`census`]: `GL_2(F_p)` arithmetic and the brute-force
//!   census of `(det, trace)` cells behind every density;
//! - [`ap`]: Fourier coefficients `a_l`, by point counting or from a table;
//! - [`carayol`]: the disjoint prime sets of Carayol's theorem and the
//!   admissible raised levels;
//! - [`local`]: local factors `δ = s_l · d_l` and the λ-transfer identity;
//! - [`stability`]: the stable and growth prime sets and their verdicts.

pub mod ap;
pub mod carayol;
pub mod census;
pub mod densities;
pub mod error;
pub mod ffmat;
pub mod local;
pub mod primes;
pub mod rational;
pub mod stability;

pub use error::{Error, Result};
