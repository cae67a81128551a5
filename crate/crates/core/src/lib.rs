//! Finite spectral models for two odd-dimensional index theorems.
//!
//! The crate builds exact truncations of Dirac operators on the circle,
//! on products `S¹ × Y` and on cylinders `[0, L] × Y`, together with the
//! spinor lift of the reflection `x ↦ −x`. From these it computes
//!
//! * the chiral index of `D` between the `±1` eigenspaces of the lift and
//!   the fixed-point sum that predicts it ([`involution`]);
//! * the index of the cylinder operator under mixed local boundary
//!   conditions and the boundary sums that predict it ([`boundary`]).
//!
//! All indices are integers extracted from singular values with an explicit
//! rank threshold ([`linop::numerical_index`]).

pub mod boundary;
pub mod clifford;
pub mod error;
pub mod geometries;
pub mod involution;
pub mod linop;

pub use error::{Error, Result};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Dense complex matrix used throughout.
pub type CMat = nalgebra::DMatrix<Complex64>;

/// Default relative rank threshold.
pub const DEFAULT_TOL_RANK: f64 = 1e-8;

/// A sign choice: lift sign, boundary condition `ε`, or orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.symbol())
    }
}
