//! Entanglement of ground and quasiparticle-excited states of one-dimensional
//! quantum chains.
//!
//! The crate is organised around four computational routes that cross-check
//! one another:
//!
//! * [`model`] defines the XY and tilted Ising chains, their Jordan-Wigner
//!   Majorana forms and explicit spin-basis matrices.
//! * [`freefermion`] diagonalizes quadratic Majorana Hamiltonians and computes
//!   entanglement from subsystem correlation matrices.
//! * [`ed`] is an exact-diagonalization oracle for any chain small enough to
//!   hold in memory, including nonintegrable ones.
//! * [`mpsx`] handles uniform matrix product states and the momentum
//!   excitation ansatz built on them.
//!
//! [`analysis`] drives scans over these and fits finite-size corrections.

pub mod analysis;
pub mod ed;
pub mod error;
pub mod freefermion;
pub mod model;
pub mod mpsx;

pub use error::{Error, Result};

/// Natural logarithm of two, the entanglement carried by one delocalized
/// quasiparticle.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Reflection or fermion-parity eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn from_sign(sign: f64) -> Self {
        if sign >= 0.0 {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Plus => Parity::Minus,
            Parity::Minus => Parity::Plus,
        }
    }

    pub fn times(self, other: Parity) -> Self {
        if self == other {
            Parity::Plus
        } else {
            Parity::Minus
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Parity::Plus => "+",
            Parity::Minus => "-",
        }
    }
}
