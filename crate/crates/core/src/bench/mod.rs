//! Instance generators and the seeded Monte Carlo trial runner.

mod generator;
mod runner;

pub use generator::{generate_instance, Generated, GeneratorKind, GeneratorSpec};
pub use runner::{
    load_instance, read_csv, run_trials, run_trials_on, write_csv, write_csv_to, AdvicePolicy,
    Algorithm, InstanceSource, Summary, TrialConfig, TrialReport, TrialRun, CSV_HEADER,
};
