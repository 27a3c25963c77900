//! Scenario configuration, Monte-Carlo sweeps, spectral analysis and CSV output.

pub mod config;
pub mod csv;
pub mod demo;
pub mod psd;
pub mod sweep;

pub use config::{CovarianceModel, CsiMode, SimConfig, SweepAxis};
pub use sweep::{
    run_sweep, run_sweep_cached, sequential_kernels, single_trial, PointResult, PulseCache,
    SimReport, TrialDetail,
};
