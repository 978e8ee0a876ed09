//! Scenario files and the end-to-end runner behind the command line.

mod budget;
mod config;
mod run;
mod stimulus;
mod sweep;

pub use budget::{report_link_budget, LinkBudget, BUDGET_CODE_CYCLES};
pub use config::{
    load_scenario, parse_scenario, ChipNoise, LinkScenario, MoteSetup, NoiseSection,
    SCENARIO_SCHEMA_VERSION,
};
pub use run::{run, write_artifacts, MoteRun, RunArtifacts, PILOT_LEVEL};
pub use stimulus::{Stimulus, StimulusSpec, Trace};
pub use sweep::{apply_axis, parse_grid, sweep, write_sweep_csv, SweepAxis, SweepRow};
