//! Simulation and analysis toolkit for the thermal diffusion of a free
//! particle in one dimension.
//!
//! A particle at temperature `T` carries a thermal momentum spread
//! `dp = sqrt(kB T m)`, starts in the matching minimum-uncertainty
//! wavepacket of width `dx0 = hbar / (2 dp)`, and its position
//! distribution spreads both coherently (wavepacket dispersion) and
//! incoherently (classical diffusion of the packet center with
//! `D = hbar / 2m`). The position entropy then grows at the exact rate
//! `2 kB T / hbar` nats per unit time, and every module here gives an
//! independent route to that number:
//!
//! - [`units`]: parameters, unit systems, and the four derived scales.
//! - [`entropy`]: closed-form variance schedule, Gaussian entropies, and
//!   the two entropy-rate constructions with their bound curves.
//! - [`wavepacket`]: closed-form wavefunction and an independent discrete
//!   spectral propagator that cross-checks it.
//! - [`ensemble`]: Monte Carlo trajectory ensembles and nonparametric
//!   entropy-rate estimation from samples.
//! - [`streams`]: counter-based random streams so ensembles are
//!   bit-reproducible regardless of thread count.

pub mod ensemble;
pub mod entropy;
pub mod streams;
pub mod units;
pub mod wavepacket;

pub use ensemble::{
    ensemble_stats, entropy_nn, rate_from_ensemble, sample_trajectories, EnsembleError,
    EnsembleStats, EntropyEstimator, Scheme, StepStats, TrajectoryEnsemble,
};
pub use entropy::{
    bound_report, gaussian_entropy, rate_block, rate_conditional, rate_exact_point,
    variance_classical, variance_quantum, variance_total, BoundReportRow, EntropyError,
    RateCurvePoint, RateMethod, VarianceBreakdown,
};
pub use units::{
    DerivedScales, PhysicalParams, TimestepReport, TimestepVerdict, UnitSystem, UnitsError,
    CODATA_BOLTZMANN, CODATA_HBAR,
};
pub use wavepacket::{
    pdf_closed_form, psi_closed_form, Moments, SpatialGrid, SpectralError, SpectralState,
};

// Amplitudes are complex; re-export the type they come in.
pub use num_complex::Complex64;

/// Crate version, embedded into every artifact the CLI writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
