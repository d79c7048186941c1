//! Spectral simulation and variational toolkit for the three-dimensional nonlinear
//! Schrödinger equation with a harmonically averaged nonlinearity:
//!
//! `i∂_tφ = −∂_z²φ + λ F_av(φ)`,  `F_av(φ) = (2/π)∫₀^{π/2} V(−θ)(|V(θ)φ|^{2σ}V(θ)φ) dθ`,
//!
//! with `V(θ) = e^{−iθH}`, `H = −Δ_y + |y|²` on ℝ², and z periodised on `[−L/2, L/2)`.

pub mod basis;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod evolution;
pub mod functionals;
pub mod ground_state;
pub mod nonlinearity;
pub mod propagators;
pub mod run;
pub mod scattering;
pub mod virial;

pub use basis::{Basis, BasisSpec, HermiteTable, PhysicalField, SpectralField};
pub use error::{Result, RnlsError};
