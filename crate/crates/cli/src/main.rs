use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ico_battery_cli::{
    bursts, check_rows, export_circuits, noise_study, sweep, write_noise_csv, write_noise_shots, write_sweep_csv,
    CliError, CliResult, Engine, Overrides, SweepConfig,
};

#[derive(Parser)]
#[command(name = "ico-battery", version, about = "Cyclic indefinite-causal-order quantum battery charging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// E, W and P for ICO and DCO over a time grid, as CSV.
    Sweep(CommonArgs),
    /// Efficiency-burst intervals and DCO zero windows, as JSON.
    Bursts(CommonArgs),
    /// One OpenQASM 3 file per grid point plus a manifest (N = 2 only).
    ExportCircuits(CommonArgs),
    /// Ideal figures against sampled noisy estimates (N = 2 only), as CSV.
    NoiseStudy {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write raw shot counts to this CSV file.
        #[arg(long)]
        shots_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Charger counts, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long = "depol-p")]
    depol_p: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (directory for export-circuits). Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long = "eps-dco")]
    eps_dco: Option<f64>,
}

impl CommonArgs {
    fn resolve(self) -> CliResult<SweepConfig> {
        let base = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        let cfg = base.with_overrides(Overrides {
            n_list: self.n_list,
            omega: self.omega,
            lambda: self.lambda,
            t_min: self.t_min,
            t_max: self.t_max,
            points: self.points,
            engine: self.engine,
            shots: self.shots,
            depolarizing_p: self.depol_p,
            seed: self.seed,
            out: self.out,
            tau: self.tau,
            eps_dco: self.eps_dco,
        });
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let rows = sweep(&cfg)?;
            write_sweep_csv(output(cfg.out.as_deref())?, &rows, cfg.engine == Engine::Both)?;
            check_rows(&rows)
        }
        Command::Bursts(args) => {
            let cfg = args.resolve()?;
            let report = bursts(&cfg)?;
            let mut out = output(cfg.out.as_deref())?;
            serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(out)?;
            out.flush()?;
            Ok(())
        }
        Command::ExportCircuits(args) => {
            let cfg = args.resolve()?;
            let dir = cfg.out.clone().ok_or_else(|| CliError::Config("export-circuits needs --out <dir>".into()))?;
            let rows = export_circuits(&cfg, &dir)?;
            eprintln!("wrote {} circuits to {}", rows.len(), dir.display());
            Ok(())
        }
        Command::NoiseStudy { common, shots_out } => {
            let cfg = common.resolve()?;
            let rows = noise_study(&cfg)?;
            write_noise_csv(output(cfg.out.as_deref())?, &rows)?;
            if let Some(path) = shots_out {
                write_noise_shots(output(Some(&path))?, &rows)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
