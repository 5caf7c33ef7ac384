use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pnpqkd::{parse_config, run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "pnpqkd",
    version,
    about = "Secure key rates of plug-and-play BB84 with an untrusted source"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML file with physical constants, conventions and run options
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// no-decoy-infinite, no-decoy-finite, decoy-infinite or decoy-finite
    #[arg(long, global = true)]
    scenario: Option<String>,

    /// Comma-separated pulse counts N_A
    #[arg(long, global = true, value_delimiter = ',')]
    na: Option<Vec<f64>>,

    /// First distance of the grid (km)
    #[arg(long, global = true)]
    lmin: Option<f64>,

    /// Last distance of the grid (km)
    #[arg(long = "lmax-km", global = true)]
    lmax_km: Option<f64>,

    /// Grid step (km)
    #[arg(long, global = true)]
    lstep: Option<f64>,

    /// Rate below which a point has no key
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// Seed of the quasi-random optimizer starts
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimize the key rate along the distance grid
    Scan,
    /// Maximum distance with a key, per pulse count
    Lmax,
    /// Smallest pulse count giving any key
    Nath,
    /// All datasets of fig2, fig3 or fig5
    Figure { id: String },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = &cli.scenario {
        config.scenario = Some(s.clone());
    }
    if let Some(na) = &cli.na {
        config.pulses = Some(na.clone());
    }
    config.lmin = cli.lmin.unwrap_or(config.lmin);
    config.lmax_km = cli.lmax_km.unwrap_or(config.lmax_km);
    config.lstep = cli.lstep.unwrap_or(config.lstep);
    config.threshold = cli.threshold.unwrap_or(config.threshold);
    config.seed = cli.seed.unwrap_or(config.seed);
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match &cli.command {
        Cmd::Scan => Command::Scan,
        Cmd::Lmax => Command::Lmax,
        Cmd::Nath => Command::Nath,
        Cmd::Figure { id } => Command::Figure(id.clone()),
    };
    match load(&cli).and_then(|config| run(&config, &command)) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
