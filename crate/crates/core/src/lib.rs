//! Pseudo-spectral simulator for the fractional-diffusion Navier-Stokes
//! equations on the periodic torus, coupled to continuous data assimilation
//! by nudging (the Azouani-Olson-Titi scheme).

pub mod assimilation;
pub mod checkpoint;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod integrator;
pub mod interp;
pub mod params;
pub mod spectral;
pub mod verify;

pub use assimilation::{
    absorbing_ball_time, fit_decay_rate, run_coupled, spin_up, theta, threshold_report, DecayFit, DecayResult,
    ErrorSeries, RunOutcome, ThresholdReport, Track,
};
pub use error::{Error, Result};
pub use field::{RandomFieldSpec, SpectralField};
pub use grid::TorusGrid;
pub use integrator::{rhs_nudged, rhs_reference, step, Scheme, SimState, Stepper, StepperConfig};
pub use interp::{apply_interpolant, measure_interp_constant, InterpolantSpec};
pub use params::{PhysParams, LAMBDA1};
pub use spectral::{
    dealias, fractional_laplacian, inner_product, leray_project, lp_norm, nonlinear_term, sobolev_norm, trilinear,
    Lp,
};
