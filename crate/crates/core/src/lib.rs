//! # mcqn
//!
//! A toolkit for open multiclass queueing networks with preemptive
//! priority service:
//!
//! - [`model`] describes and validates network instances and solves the
//!   traffic equations `lambda = alpha + P' lambda`.
//! - [`builtins`] provides the KRSS, modified-KRSS, LK, and modified-LK
//!   example networks and recognizes relabeled instances of them.
//! - [`classify`] evaluates the closed-form stability conditions of those
//!   families.
//! - [`fluid`] solves the associated priority fluid dynamics as a
//!   piecewise-linear trajectory, probes stability from batches of initial
//!   conditions, and audits the phase/workload structure of stable runs.
//! - [`sim`] simulates the queue-length CTMC and estimates stationary
//!   queue lengths with batch-means confidence intervals.
//! - [`sweep`] runs admission-rate sweeps that combine all engines and
//!   persist CSV results, including the regime where admitting *more*
//!   work makes the network stable and admitting less makes it transient.
//!
//! Independent runs (probe samples, replications, grid points) execute in
//! parallel via rayon when the default `parallel` feature is enabled;
//! results are deterministic either way.

pub mod builtins;
pub mod classify;
pub mod error;
pub mod exec;
pub mod fluid;
pub mod format;
pub mod io;
pub mod model;
pub mod sim;
pub mod sweep;

pub use builtins::{builtin_network, detect_family, Builtin, BuiltinParams};
pub use classify::{
    classify_krss, classify_modified_krss, classify_modified_lk, classify_network,
    theorem1_thresholds, virtual_station_intensity, StabilityVerdict, Verdict,
};
pub use error::{FluidError, ModelError, SimError};
pub use fluid::{
    allocation_rates, fluid_advance, fluid_solve, lyapunov::lyapunov_audit, stability_probe,
    FluidTrajectory, FluidVerdict, RateAllocation, TerminalVerdict,
};
pub use model::{traffic_solve, validate_network, NetworkSpec, TrafficSummary, ValidationReport};
pub use sim::{divergence_test, run_replications, simulate, SimConfig, SimStats};
pub use sweep::{reproduce_figure3, sweep_admission, SweepFamily, SweepRecord, SweepSettings};

#[cfg(test)]
mod thread_safety {
    use super::*;

    fn assert_send_sync<T: Send + Sync>() {}

    #[test]
    fn shared_types_are_send_and_sync() {
        assert_send_sync::<NetworkSpec>();
        assert_send_sync::<TrafficSummary>();
        assert_send_sync::<FluidTrajectory>();
        assert_send_sync::<SimStats>();
    }
}
