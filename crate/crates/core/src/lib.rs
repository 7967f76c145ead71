//! Numerical library for elastic step bunching on vicinal surfaces.
//!
//! Steps on a vicinal surface interact through a Lennard-Jones (m, n) pair
//! of elastic effects: an attractive force monopole decaying like
//! distance^{-(m+1)} and a repulsive force dipole decaying like
//! distance^{-(n+1)}, with -1 < m < 1 < n. This crate implements both the
//! discrete step model and its continuum limit on the periodic domain
//! Omega = [-1/2, 1/2):
//!
//! * [`special`] - real-axis zeta/eta, the Lanczos gamma function, the
//!   oscillatory constant S_m, and physical-to-model parameter conversion.
//! * [`kernel`] - the 1-periodic interaction kernel K_m in real space
//!   (lattice sums) and Fourier space (closed-form multipliers).
//! * [`profile`] - periodic step-density profiles, spectral conversions,
//!   symmetric decreasing rearrangement, CSV I/O.
//! * [`energy`] - the local density Phi_{m,n}, the nonlocal energy in its
//!   kernel and Fourier representations, the null Lagrangian, chemical
//!   potential, Euler-Lagrange residual and related checks.
//! * [`minimize`] - projected gradient descent over {rho >= 0, mean = A},
//!   the bunching ansatz, support detection, and the continuum gradient
//!   flow h_t = mu_xx.
//! * [`discrete`] - periodized step configurations, lattice sums sigma_i,
//!   atomistic chemical potentials, and adaptive step dynamics.
//! * [`asymptotics`] - Euler-Maclaurin expansion for singular integrals,
//!   asymptotic sigma predictions, and the discrete-vs-continuum
//!   consistency experiment.
//! * [`experiments`] - the minimum-energy scaling sweep and the
//!   symmetry/unimodality evidence suite.
//!
//! All numerics are generic over the scalar type through [`real::Real`]
//! (f32 or f64); the aliases below fix f64 versions of the main types.

pub mod asymptotics;
pub mod discrete;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod kernel;
mod lattice;
pub mod minimize;
pub mod profile;
pub mod quad;
pub mod real;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use real::Real;

/// f64 interaction kernel table.
pub type KernelTable64 = kernel::KernelTable<f64>;
/// f64 grid profile.
pub type GridProfile64 = profile::GridProfile<f64>;
/// f64 spectral profile.
pub type SpectralProfile64 = profile::SpectralProfile<f64>;
/// f64 model parameters.
pub type ModelParams64 = special::ModelParams<f64>;
/// f64 physical parameters.
pub type PhysicalParams64 = special::PhysicalParams<f64>;
/// f64 step configuration.
pub type StepConfiguration64 = discrete::StepConfiguration<f64>;
