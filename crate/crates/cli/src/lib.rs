//! Batch driver behind the `pnpqkd` binary: scans, `L_max` and pulse-threshold
//! solves, and figure datasets, each written as CSV files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pnpqkd_core::experiments::{
    distance_grid, pulse_label, records_dataset, Dataset, Field, Figure, DECOY_PULSES,
    NO_DECOY_PULSES,
};
use pnpqkd_core::{Error as CoreError, Scenario};
use thiserror::Error;

pub use config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Run(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidGrid(_) | CoreError::UnknownFigure(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Run(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    /// Optimized records along the distance grid, one file per pulse count.
    Scan,
    /// `L_max` for every pulse count.
    Lmax,
    /// Smallest pulse count with a positive `L_max`.
    Nath,
    Figure(String),
}

fn required_scenario(config: &RunConfig) -> Result<Scenario, CliError> {
    config.scenario()?.ok_or_else(|| {
        CliError::Usage("no scenario given (use --scenario or `scenario` in the config)".into())
    })
}

fn pulse_counts(config: &RunConfig, scenario: Scenario) -> Vec<f64> {
    if !scenario.is_finite() {
        return vec![f64::INFINITY];
    }
    match &config.pulses {
        Some(list) => list.clone(),
        None if scenario.uses_decoys() => DECOY_PULSES.to_vec(),
        None => NO_DECOY_PULSES.to_vec(),
    }
}

/// Computes every dataset of `command` without touching the file system.
pub fn datasets(config: &RunConfig, command: &Command) -> Result<Vec<Dataset>, CliError> {
    config.validate()?;
    let exp = config.experiment();
    match command {
        Command::Scan => {
            let scenario = required_scenario(config)?;
            let grid = distance_grid(config.lmin, config.lmax_km, config.lstep)?;
            pulse_counts(config, scenario)
                .into_iter()
                .map(|n| {
                    let records = exp.scan_distance(scenario, n, &grid)?;
                    let name = format!("scan_{}_{}", scenario.token(), pulse_label(n));
                    Ok(records_dataset(&name, &records, &exp.model, exp.threshold))
                })
                .collect()
        }
        Command::Lmax => {
            let scenario = required_scenario(config)?;
            let rows = pulse_counts(config, scenario)
                .into_iter()
                .map(|n| {
                    Ok(vec![
                        Field::Text(scenario.token().into()),
                        Field::Num(n),
                        Field::Num(exp.find_lmax(scenario, n)?),
                    ])
                })
                .collect::<Result<_, CliError>>()?;
            Ok(vec![Dataset {
                name: format!("lmax_{}", scenario.token()),
                columns: ["scenario", "N_A", "L_max_km"].map(String::from).to_vec(),
                rows,
            }])
        }
        Command::Nath => {
            let scenario = required_scenario(config)?;
            if !scenario.is_finite() {
                return Err(CliError::Usage(format!(
                    "{scenario} has no pulse threshold"
                )));
            }
            let n = exp.find_na_threshold(scenario)?;
            Ok(vec![Dataset {
                name: format!("nath_{}", scenario.token()),
                columns: ["scenario", "threshold", "N_A_th"]
                    .map(String::from)
                    .to_vec(),
                rows: vec![vec![
                    Field::Text(scenario.token().into()),
                    Field::Num(exp.threshold),
                    Field::Num(n),
                ]],
            }])
        }
        Command::Figure(id) => {
            let figure: Figure = id.parse()?;
            let grid = distance_grid(config.lmin, config.lmax_km, config.lstep)?;
            Ok(exp.figure_datasets(figure, &grid)?)
        }
    }
}

/// Writes `<out>/<name>.csv` for every dataset and returns the paths.
pub fn write_datasets(out: &Path, sets: &[Dataset]) -> Result<Vec<PathBuf>, CliError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(out).map_err(io_err(out))?;
    sets.iter()
        .map(|set| {
            let path = out.join(format!("{}.csv", set.name));
            fs::write(&path, set.to_csv()).map_err(io_err(&path))?;
            Ok(path)
        })
        .collect()
}

/// Runs `command`; nothing is written unless every dataset was computed.
pub fn run(config: &RunConfig, command: &Command) -> Result<Vec<PathBuf>, CliError> {
    let sets = datasets(config, command)?;
    write_datasets(&config.out, &sets)
}
