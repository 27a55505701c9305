use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hks::commands::{self, OdeArgs, TraceArgs};
use hks::{presets, CliError};
use hks_core::fitting::{DEFAULT_COUNT_SCALE, DEFAULT_SATURATION};

#[derive(Parser)]
#[command(name = "hks", version, about = "Two-species repulsion model: simulation, ODE analysis, fitting and characteristics")]
struct Cli {
    /// Print the built-in presets and exit.
    #[arg(long)]
    list_presets: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Source {
    /// Built-in preset name (see --list-presets).
    #[arg(long, short)]
    preset: Option<String>,
    /// TOML config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Config overrides, `--section.key value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

impl Source {
    fn resolve(&self) -> Result<hks::Config, CliError> {
        commands::resolve_config(self.preset.as_deref(), self.config.as_deref(), &self.overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the PDE and write metrics.csv, snapshots and summary.json.
    Simulate {
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        source: Source,
    },
    /// Classify the kinetics and integrate the homogeneous ODE.
    Ode {
        #[arg(long, short, default_value = "ode")]
        out: PathBuf,
        /// Initial state `u1,u2`.
        #[arg(long, value_parser = parse_pair, default_value = "0.01,0.01")]
        u0: [f64; 2],
        #[arg(long, default_value_t = OdeArgs::default().t_end)]
        t_end: f64,
        #[arg(long, default_value_t = OdeArgs::default().dt)]
        dt: f64,
        #[command(flatten)]
        source: Source,
    },
    /// Fit the growth rate to a control series and the mortality to treated ones.
    Fit {
        /// Control series, CSV with header `t,count`.
        control: PathBuf,
        /// Treated series, same format.
        treated: Vec<PathBuf>,
        /// Rescaled saturation K̃.
        #[arg(long, default_value_t = DEFAULT_SATURATION)]
        saturation: f64,
        /// Raw counts are divided by this.
        #[arg(long, default_value_t = DEFAULT_COUNT_SCALE)]
        scale: f64,
        #[arg(long, short, default_value = "fit.csv")]
        out: PathBuf,
    },
    /// Trace characteristics through a finished run directory.
    Trace {
        /// Directory written by `simulate` (needs its config.toml).
        run: PathBuf,
        /// Start point `x` or `x,y`; repeatable. Default: zero set of the initial data.
        #[arg(long = "x0", value_parser = parse_point, allow_negative_numbers = true)]
        starts: Vec<[f64; 2]>,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Species 1 or 2.
        #[arg(long, default_value_t = 1)]
        species: usize,
        #[arg(long, default_value_t = TraceArgs::default().frame_every)]
        frame_every: f64,
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = TraceArgs::default().courant)]
        courant: f64,
        /// Also compare the mass carried by all cells along the flow.
        #[arg(long)]
        volume: bool,
        #[arg(long, short, default_value = "trace")]
        out: PathBuf,
    },
    /// Write the initial fields and cluster centres.
    Seed {
        #[arg(long, short, default_value = "seed")]
        out: PathBuf,
        #[command(flatten)]
        source: Source,
    },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] => Ok([a, b]),
        _ => Err("expected two comma-separated numbers".into()),
    }
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    match s.split_once(',') {
        Some(_) => parse_pair(s),
        None => s.trim().parse::<f64>().map(|x| [x, 0.0]).map_err(|e| e.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.list_presets {
        for p in presets::presets() {
            println!("{:<16} {}", p.name, p.note);
        }
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config("no subcommand given; see --help".into()));
    };
    match command {
        Command::Simulate { out, source } => {
            let o = commands::simulate(&source.resolve()?, &out)?;
            println!(
                "t={} steps={} p1={} p2={} mass_residual={:e}",
                o.state.t, o.stats.steps, o.last.proportion[0], o.last.proportion[1], o.last.mass_residual
            );
        }
        Command::Ode { out, u0, t_end, dt, source } => {
            let report = commands::ode(&source.resolve()?, OdeArgs { u0, t_end, dt }, &out)?;
            println!("{report}");
        }
        Command::Fit { control, treated, saturation, scale, out } => {
            for r in commands::fit(&control, &treated, saturation, scale, &out)? {
                println!("b={} a={} delta={} rss={:e}", r.b, r.a, r.delta, r.rss);
            }
        }
        Command::Trace { run, starts, stride, species, frame_every, t_start, t_end, courant, volume, out } => {
            if !(1..=2).contains(&species) {
                return Err(CliError::Config("species must be 1 or 2".into()));
            }
            let args = TraceArgs { starts, stride, species: species - 1, frame_every, t_start, t_end, courant, volume };
            let report = commands::trace(&run, &args, &out)?;
            println!(
                "paths={} max_abs_position={}",
                report["paths"].as_array().map_or(0, Vec::len),
                report["max_abs_position"]
            );
        }
        Command::Seed { out, source } => commands::seed(&source.resolve()?, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
