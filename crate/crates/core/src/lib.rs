//! Reconfigurable holographic surface (RHS) modeling and integrated
//! sensing-and-communication (ISAC) optimization.
//!
//! The crate is organized around the physical signal chain of an RHS
//! transceiver:
//!
//! * [`rhs`] — surface geometry, reference-wave propagation, holographic
//!   patterns, the leakage power constraint, and the feed-to-radiation map.
//! * [`wavefield`] — steering vectors (far and near field), hybrid channels,
//!   and radiated beampatterns.
//! * [`metrics`] — communication, sensing, and cost metrics shared by the
//!   optimizers.
//! * [`beamopt`] — beamformer optimization: the projected-ascent engine,
//!   pattern QCQPs with a brute-force oracle, Pareto tradeoff fronts, joint
//!   communication-and-sensing transmit design, transceiver co-design,
//!   distributed sensing, and pattern-superposition (HDMA) weights.
//! * [`chanest`] — hybrid near/far-field channel estimation: dictionaries,
//!   pilot simulation, OMP, and power-diffusion-aware OMP.
//! * [`beamtrain`] — the (φ, μ) domain transform, hierarchical multi-user
//!   codebooks, distance codewords, sliding-window aperture selection, and
//!   the end-to-end training simulator.
//!
//! # Coordinate convention
//!
//! The RHS lies in the y–z plane with boresight along +x. Element `(iy, iz)`
//! (0-based) sits at `(0, iy·d_e, iz·d_e)`; the feed of row `iy` sits at the
//! first element of that row, and the guided reference wave travels toward
//! +z. Directions are spherical: `theta` is the polar angle from +z (the
//! feed axis) and `phi` the azimuth from +x toward +y, so a propagation unit
//! vector is `(sinθ·cosφ, sinθ·sinφ, cosθ)`. For a single row along z the
//! phase gradient is `cosθ`, which matches the axis-referenced convention of
//! the (φ, μ) transform in [`beamtrain`]; the broadside-referenced angle ϑ
//! used by 1-D steering in [`wavefield`] maps to it via `sinϑ = cosθ`.
//!
//! All angles are radians and all lengths meters unless a name says
//! otherwise. Core math is generic over the scalar type (see [`scalar`]),
//! with `f64` aliases exported at the crate root.

pub mod beamopt;
pub mod beamtrain;
pub mod chanest;
pub mod error;
pub mod metrics;
pub mod rhs;
pub mod rng;
pub mod scalar;
pub mod wavefield;

pub use error::Error;
pub use scalar::{Cplx, Real};

/// Crate-level result type.
pub type Result<T, E = Error> = std::result::Result<T, E>;

// Concrete `f64` aliases for the main domain types.
pub type RhsConfig64 = rhs::RhsConfig<f64>;
pub type HolographicPattern64 = rhs::HolographicPattern<f64>;
pub type ApertureWindow64 = rhs::ApertureWindow;
pub type Beamformer64 = rhs::Beamformer<f64>;
pub type HybridChannel64 = wavefield::HybridChannel<f64>;
pub type SolveReport64 = beamopt::SolveReport<f64>;
pub type Codebook64 = beamtrain::Codebook<f64>;
pub type Dictionary64 = chanest::Dictionary<f64>;

