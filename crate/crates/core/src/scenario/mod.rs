//! JSON scenario configuration, orchestration and artifact output.

mod config;
mod density;
mod run;

pub use config::{
    parse_config, DensitySpec, ExperimentSpec, FgiCheck, ManifoldSpec, ScenarioConfig, Tolerances, Violation,
};
pub use density::build_density;
pub use run::{
    config_hash, execute, manifold_at, run_scenario, to_json_bytes, write_outputs, Artifact, Check, ExitStatus,
    Outcome, RunOptions, RunResult,
};
