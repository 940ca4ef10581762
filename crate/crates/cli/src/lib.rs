//! Configuration, experiment runner and report writers behind the
//! `superhedge` binary.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{parse_config, ConfigError, ExperimentConfig, Outputs, PayoffSpec};
pub use experiment::{
    run_experiment, ExperimentError, ExperimentReport, PricedClaim, StrikeResult, EXIT_AIP,
    EXIT_CONFIG, EXIT_FAILURE, EXIT_INFINITE_PRICE, EXIT_OK,
};
