//! Band structure, perturbation series, and transport velocities for
//! periodic lattice Schrödinger operators `H_μ = Δ + μV` on `ℤ^d` in the
//! large-coupling regime.
//!
//! The crate is organized around the Floquet fibration: a `p`-periodic
//! potential reduces `H_μ` to a family of `P×P` matrices `H_μ(z)` indexed
//! by quasimomentum `z`, with `P = p₁⋯p_d`. On top of that sit
//!
//! * [`lattice`] — periodic potentials, fundamental cell bookkeeping,
//!   separation and admissibility constants;
//! * [`laurent`] — exact multivariate Laurent polynomials over rationals,
//!   the substrate for symbolic Floquet matrices and series coefficients;
//! * [`floquet`] — symbolic and numeric Floquet matrices, Hermitian and
//!   general eigensolvers, Gershgorin band labeling;
//! * [`perturb`] — the Rayleigh–Schrödinger expansion of Floquet
//!   eigenvalues in the hopping strength, with independent loop-counting
//!   oracles for its low orders;
//! * [`velocity`] — group velocities on the Brillouin torus, asymptotic
//!   velocity, and coupling sweeps with power-law fits;
//! * [`evolve`] — propagator blocks by torus quadrature, finite-box
//!   reference evolution, light-cone front tracking, and empirical
//!   Lieb–Robinson bound fits;
//! * [`verify`] — built-in fixture models and the cross-module invariant
//!   suite behind `blochlab verify`.

pub mod error;
pub mod fit;
pub mod lattice;
pub mod laurent;
pub mod linalg;
pub mod floquet;
pub mod perturb;
pub mod velocity;
pub mod evolve;
pub mod verify;

pub use error::{Error, Result};
