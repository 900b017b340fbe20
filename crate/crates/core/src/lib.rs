//! Borel–Laplace summation and Stokes phenomena for the Cauchy problem
//! `∂_t u = a (∂_t t)^p t^q ∂_z^r u`, `u(0, z) = φ(z)`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::should_implement_trait)]

pub mod datum;
pub mod error;
mod fit;
pub mod geometry;
mod guard;
pub mod moments;
pub mod pde;
pub mod quadrature;
pub mod series;
pub mod special;
pub mod stokes;
pub mod transforms;
pub mod verify;

pub use datum::InitialDatum;
pub use error::{Error, Result};
pub use geometry::{CoverPoint, Direction, GrowthClass, Sector};
pub use moments::{KernelPair, MomentFunction};
pub use pde::{CauchyProblem, Regime, RegimeTag};
pub use quadrature::{Estimate, QuadratureConfig};
pub use series::FormalSeries;
pub use stokes::{JumpReport, JumpSample, StokesLine};
pub use verify::CheckOutcome;
