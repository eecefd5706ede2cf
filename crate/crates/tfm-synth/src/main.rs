use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tfm_core::inversion::CalibrationScan;
use tfm_core::spectral_core::Rate;
use tfm_synth::commands::{
    calibration_json, cmd_calibrate, cmd_optimize, cmd_pgr, cmd_simulate, cmd_sweep_mzi, default_mu_range, out_path, OptimizeOptions,
    SimulateOptions,
};
use tfm_synth::config::{load, SynthConfig};
use tfm_synth::output::{json_text, write_atomic};
use tfm_synth::units::{parse_quantity, Kind};
use tfm_synth::{preset_path, CliError};

#[derive(Parser)]
#[command(name = "tfm-synth", version, about = "Design and analyse time-frequency-mode entangled photon pair sources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Device config file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset: bell_phi_minus, mes_d3, mes_d4 or separable.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<SynthConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(p), _) => load(p),
            (None, Some(name)) => load(&preset_path(name)?),
            (None, None) => Err(CliError::Config("either --config or --preset is required".into())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Forward simulation: JSA dump, spectra and analysis report.
    Simulate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid points per axis.
        #[arg(long)]
        grid: Option<usize>,
        /// Also write the JSA as CSV.
        #[arg(long)]
        jsa_csv: bool,
    },
    /// Search couplings and pump parameters for the config's target state.
    Optimize {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Grid points per axis inside the search loop.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Pair generation rate estimate, printed as JSON.
    Pgr {
        #[command(flatten)]
        source: Source,
        /// Average pump power, e.g. "1mW".
        #[arg(long)]
        avg_power: Option<String>,
        /// Pulse repetition rate, e.g. "500MHz".
        #[arg(long)]
        rep_rate: Option<String>,
    },
    /// MZI phase settings versus coupling rate, as CSV.
    SweepMzi {
        #[command(flatten)]
        source: Source,
        /// Output CSV file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Splitter power coupling, overriding the config.
        #[arg(long)]
        splitter: Option<f64>,
        #[arg(long)]
        mu_min: Option<String>,
        #[arg(long)]
        mu_max: Option<String>,
        #[arg(long)]
        mu_step: Option<String>,
    },
    /// Recover the delay-line reference phase and state bandwidth for the configured taps.
    Calibrate {
        #[command(flatten)]
        source: Source,
    },
}

fn flag(value: &Option<String>, kind: Kind, name: &str) -> Result<Option<f64>, CliError> {
    value.as_ref().map(|v| parse_quantity(v, kind).map_err(|e| CliError::Config(format!("--{name}: {e}")))).transpose()
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("TFM_SYNTH_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("TFM_SYNTH_THREADS must be a positive integer, got \"{v}\"")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(format!("TFM_SYNTH_THREADS: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { source, out, grid, jsa_csv } => {
            let cfg = source.load()?;
            let dir = out_path(&out, "tfm-out");
            let (_, report) = cmd_simulate(&cfg, &dir, SimulateOptions { grid, jsa_csv })?;
            print!("{}", json_text(&report)?);
        }
        Command::Optimize { source, out, seed, restarts, grid } => {
            let cfg = source.load()?;
            let dir = out_path(&out, "tfm-opt");
            let res = cmd_optimize(&cfg, &dir, OptimizeOptions { seed, restarts, grid })?;
            print!("{}", json_text(&res.summary)?);
        }
        Command::Pgr { source, avg_power, rep_rate } => {
            let cfg = source.load()?;
            let p = flag(&avg_power, Kind::Power, "avg-power")?;
            let r = flag(&rep_rate, Kind::Cyclic, "rep-rate")?;
            print!("{}", json_text(&cmd_pgr(&cfg, p, r)?)?);
        }
        Command::SweepMzi { source, out, splitter, mu_min, mu_max, mu_step } => {
            let cfg = source.load()?;
            let mut range = default_mu_range();
            let rate = |v: &Option<String>, name: &str, d: Rate| -> Result<Rate, CliError> {
                Ok(flag(v, Kind::Angular, name)?.map_or(d, Rate::from_rad_per_s))
            };
            range.min = rate(&mu_min, "mu-min", range.min)?;
            range.max = rate(&mu_max, "mu-max", range.max)?;
            range.step = rate(&mu_step, "mu-step", range.step)?;
            let sweep = cmd_sweep_mzi(&cfg, splitter, range)?;
            for w in &sweep.warnings {
                eprintln!("warning: {w}");
            }
            match out {
                Some(p) => write_atomic(&p, sweep.csv.as_bytes())?,
                None => print!("{}", sweep.csv),
            }
        }
        Command::Calibrate { source } => {
            let cfg = source.load()?;
            let c = cmd_calibrate(&cfg, &CalibrationScan::default())?;
            print!("{}", json_text(&calibration_json(&c))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tfm-synth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
