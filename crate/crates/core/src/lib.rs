//! Deterministic, seeded, fixed-step agent-based demographic simulation.
//!
//! A population of individuals lives in houses spread over a 12×8 grid of
//! towns. Each step applies ageing, deaths, births, divorces and marriages in
//! a configurable order. Subpopulations are described with a small feature
//! algebra ([`features`]) that includes the temporal operators `just` and
//! `pre`.
//!
//! Randomness comes from a single ChaCha8 stream per run, seeded from a
//! 64-bit integer; every output is a function of the configuration and seed.

pub mod audit;
pub mod config;
pub mod engine;
pub mod error;
pub mod events;
pub mod export;
pub mod features;
pub mod init;
pub mod params;
pub mod population;
pub mod space;
pub mod stats;
pub mod stochastics;

pub use audit::{check_invariants, InvariantReport};
pub use config::{EventKind, RunConfig, SimulationConfig};
pub use engine::{run_replicates, run_simulation, RunOutput, Simulation};
pub use error::{Result, SimError};
pub use events::StepEventLog;
pub use features::{EvalContext, Feature, FeatureExpr, StepSnapshot};
pub use params::{load_fertility_table, DataTables, FertilitySource, FertilityTable, ModelParameters};
pub use population::{Gender, MaritalStatus, Person, PersonId, PopulationStore};
pub use space::{DensityMap, HouseId, Residence, Space, TownId};
pub use stats::StepStatistics;
pub use stochastics::{instantaneous_probability, ClockSpec, SimRng};
