//! Robust reconstruction of two integers from erroneous unordered residue
//! pairs over moduli `M*m_k`, plus baselines, a two-tone frequency
//! simulation and Monte-Carlo sweeps.

pub mod baselines;
pub mod dynrange;
pub mod error;
pub mod gcrt2;
pub mod harness;
pub mod modmath;
pub mod robust;
pub mod sigsim;

pub use error::{Error, Result};
pub use gcrt2::{solve_two_coprime, solve_two_gcd, IntegerPair, ResidueFamily};
pub use modmath::{ModulusSet, Rational};
pub use robust::{robust_reconstruct, ErroneousResidueFamily, Estimate2};
