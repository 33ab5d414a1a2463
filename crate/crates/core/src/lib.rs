//! Analytical model of simultaneous live migration of VMs and containers.
//!
//! Two engines compute downtime, total migration time and transferred data
//! per container: [`precopy`] from averaged rates, and [`migrror`] (mirroring)
//! from per-event traces. [`fleet`] runs either engine over a set of
//! containers sharing one link, [`trace`] reads, writes, summarizes and
//! synthesizes traces, and [`experiment`] drives parameter sweeps and
//! average-versus-trace comparisons.

pub mod error;
pub mod experiment;
pub mod fleet;
pub mod migrror;
pub mod model;
pub mod precopy;
pub mod trace;

pub use error::ModelError;
pub use fleet::{run_fleet, FleetOutcome, FleetSpec, Method};
pub use model::{
    validate_profile, AveragedParams, ContainerProfile, HandoffPolicy, MigrationOutcome, ParamMode, RateTrace,
    StepLog, TraceEvent,
};
