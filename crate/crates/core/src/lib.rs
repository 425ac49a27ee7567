//! Toolkit for lattice defects and quantum monodromy.
//!
//! The crate has three layers:
//!
//! * exact algebra — arbitrary-precision rationals, 2×2 matrices, and the
//!   SL(2,Z) conjugacy machinery ([`mat2`], [`sl2`]);
//! * exact geometry — defect arrangements on the square or triangular
//!   lattice and holonomy transport of cells along paths ([`defect`],
//!   [`holonomy`]);
//! * numerics — joint spectra of resonant oscillator pairs and
//!   monodromy detection on finite point clouds ([`spectrum`], [`detect`]).
//!
//! The exact layers never touch floating point; every predicate is decided
//! in rational arithmetic. The numeric layers are the only place `f64`
//! appears.

pub mod defect;
pub mod detect;
pub mod holonomy;
pub mod mat2;
pub mod sl2;
pub mod spectrum;

pub use mat2::{rat, rat_int, RatMat2, Rational, Vec2};

/// Orientation tag shared by defects and decompositions: `Minus` is a
/// removed solid angle, `Plus` an added one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sign::Minus => write!(f, "-"),
            Sign::Plus => write!(f, "+"),
        }
    }
}
