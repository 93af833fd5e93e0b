//! Solitary waves of the Euler–Korteweg system
//!
//! ```text
//! V_t − U_y = 0
//! U_t + p(V)_y = −(κ(V) V_yy + ½ κ(V)_y V_y)_y
//! ```
//!
//! This crate reconstructs solitary-wave profiles, evaluates the moment of
//! instability m(c) = ∫ κ(v) v′² dξ together with m′(c) and m″(c), turns the
//! sign of m″ into an orbital-stability verdict, and integrates the system on
//! a periodic domain to watch perturbed standing waves drift away from their
//! translation orbit.
//!
//! ```
//! use ekwave::{moment_report, ModelSpec, MomentOptions, Verdict, WaveParameters};
//!
//! let model = ModelSpec::from_selector("bona-sachs:q=2").unwrap();
//! let report = moment_report(&model, &WaveParameters::new(0.0, 0.0), &MomentOptions::default()).unwrap();
//! assert!((report.m - 1.2).abs() < 1e-10);
//! assert_eq!(report.verdict, Verdict::UnstableStanding);
//! ```

pub mod error;
pub mod evolution;
pub mod export;
pub mod model;
pub mod moment;
pub mod profile;
pub mod quadrature;
pub mod roots;

pub use error::{Error, Result};
pub use evolution::{
    conserved, diagnostics_csv, orbital_distance, periodize, rhs, run_instability_experiment,
    stable_time_step, step_rk4, Conserved, DiagnosticsRow, EvolutionState, Experiment,
    ExperimentConfig, ExperimentOutput, OrbitalFit, OrbitalMetric, Periodized, Perturbation,
    RunSummary, Solver,
};
pub use model::{Domain, ModelKind, ModelSpec, PotentialValues, WaveParameters};
pub use moment::{
    assess, curve_csv, moment, moment_curve, moment_direct, moment_prime, moment_report,
    moment_second, moment_second_standing, stability_verdict, Assessment, CurveRow, MomentOptions,
    MomentReport, RowStatus, SecondDerivative, SecondDerivativeIntegrand, Verdict,
};
pub use profile::{
    existence_window, find_turning_point, first_integral_residual, reconstruct_profile,
    BranchPreference, Direction, Profile, ProfileOptions, SpeedWindow, TurningOptions,
    TurningPoint,
};
