//! Pseudospectral toolkit for the fractional Schrödinger–Poisson system
//!
//! ```text
//! (−Δ)^α u + V(x) u + K_α φ u = f(x, u),    (−Δ)^α φ = K_α u²    in ℝ³
//! ```
//!
//! posed on a periodic box. The crate provides the spectral calculus
//! ([`grid`]), the Riesz-potential solve for φ(u) ([`riesz`]), potentials and
//! nonlinearities with hypothesis checks ([`model`]), the reduced energy and
//! its gradient ([`energy`]) and the multi-solution machinery
//! ([`multisolve`]).

pub mod energy;
pub mod error;
mod fft;
pub mod grid;
pub mod io;
pub mod model;
pub mod multisolve;
pub mod quad;
pub mod riesz;
pub mod sum;

pub use error::{Error, Result};
pub use grid::{GridSpec, RealField, SpectralField};
