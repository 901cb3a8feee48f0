//! Numerical core for semi-discrete directed polymers.
//!
//! The crate works with *environments*: `n` continuous curves sampled on a
//! uniform grid and interpolated linearly. On top of those it provides
//!
//! * up/right and down/right path coordinates and their energies,
//! * β-free energies of single paths, non-crossing path families and
//!   down/right paths, all accumulated in log domain,
//! * the geometric RSK transforms `𝒯ᵢ`, `𝒦ᵣ`, `𝒲` together with residual
//!   evaluators for the deterministic identities they satisfy,
//! * the O'Connell-Yor polymer: Brownian environments, the KPZ line/sheet
//!   prelimit fields, the midpoint decomposition `F`/`G`, polymer marginals
//!   and the Busemann/quantile inequality suite,
//! * 1:2:3 rescaling, remainder fields and the finite-k Busemann-ray
//!   experiment,
//! * a two-sample Kolmogorov-Smirnov test and the counter-based RNG used to
//!   make replica streams reproducible.
//!
//! The crate is `no_std`-compatible (`default-features = false`); it only
//! needs `alloc`. IO, CSV/JSON schemas and the CLI live in the companion
//! `polylab` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod env;
pub mod error;
pub mod free_energy;
pub mod grsk;
pub mod logdomain;
pub mod oy;
pub mod path;
pub mod rng;
pub mod scaling;
pub mod stats;

pub use env::{CurveSource, Environment, TestFamily};
pub use error::{Error, Result};
pub use free_energy::{
    brute_force_single, down_right_free_energy, free_energy_slice, multi_free_energy,
    single_free_energy, Beta,
};
pub use grsk::{identity_residual, t_transform, w_transform, IdentityId, IdentityParams};
pub use logdomain::LogValue;
pub use oy::{sample_brownian_field, OYSample, OyParams, PolymerMarginal, ScalingConstants};
pub use path::{DownRightPathCoords, Endpoint, EndpointPair, PathCoords, SpecialEndpoints};
