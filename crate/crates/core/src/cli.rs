//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and configuration errors
//! (including unreadable input files), 2 for failures while running.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, SimConfig};
use crate::radio::cqi_table_text;
use crate::scheduler::{frame_csv_rows, FRAME_CSV_HEADER};
use crate::selector::instance::{format_assignment, parse_instance};
use crate::selector::{brute_force_solve, exact_solve, greedy_solve};
use crate::simulator::{append_interval_rows, summary_text, Simulation, INTERVALS_CSV_HEADER};

#[derive(Debug, Parser)]
#[command(name = "d2dsim", version, about = "LTE-A multi-mode D2D simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Simulate a scenario and write traces.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "./out")]
        out: PathBuf,
        /// Also write per-subframe grants to frames.csv.
        #[arg(long)]
        verbose: bool,
    },
    /// Solve a serialized mode-selection instance.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverChoice::Exact)]
        solver: SolverChoice,
    },
    /// Run one scenario per (value, seed) cell, varying one config key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        #[arg(long, default_value = "./out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverChoice {
    Exact,
    Greedy,
    Brute,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn execute(cmd: CliCommand) -> Result<(), Failure> {
    match cmd {
        CliCommand::Run {
            config,
            seed,
            out,
            verbose,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            run_to_dir(&cfg, &out, verbose)
        }
        CliCommand::Solve { instance, solver } => solve(&instance, solver),
        CliCommand::Sweep {
            config,
            param,
            values,
            seeds,
            out,
        } => sweep(&config, &param, &values, &seeds, &out),
    }
}

/// Loads a config; a relative topology path is taken relative to the config file.
fn load_config(path: &Path) -> Result<SimConfig, Failure> {
    let mut cfg = SimConfig::load(path).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(topo) = &cfg.topology_file {
        if topo.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.topology_file = Some(dir.join(topo));
            }
        }
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn run_to_dir(cfg: &SimConfig, out: &Path, verbose: bool) -> Result<(), Failure> {
    fs::create_dir_all(out)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", out.display())))?;
    write(&out.join("config.echo"), &cfg.to_config_text())?;

    let mut sim = Simulation::new(cfg.clone()).map_err(|e| match e {
        crate::simulator::SimError::Config(c) => Failure::Config(c.to_string()),
        other => Failure::Runtime(other.to_string()),
    })?;
    let mut csv = format!("{INTERVALS_CSV_HEADER}\n");
    let mut frames_csv = format!("{FRAME_CSV_HEADER}\n");
    let mut log = String::from("# CQI mapping\n");
    log.push_str(&cqi_table_text());
    log.push_str("# intervals\n");
    let mut reports = Vec::with_capacity(cfg.n_intervals as usize);
    for _ in 0..cfg.n_intervals {
        let o = sim.step().map_err(|e| Failure::Runtime(e.to_string()))?;
        append_interval_rows(&mut csv, &o.report);
        if verbose {
            frames_csv.push_str(&frame_csv_rows(o.report.interval, &o.frames, cfg.n_users));
        }
        let _ = writeln!(
            log,
            "interval {} arcs={} candidates={} solver={}",
            o.report.interval,
            o.graph.arcs.len(),
            o.problem.candidates().len(),
            o.report.solver.name()
        );
        reports.push(o.report);
    }
    write(&out.join("intervals.csv"), &csv)?;
    write(&out.join("summary.txt"), &summary_text(&reports))?;
    write(&out.join("run.log"), &log)?;
    if verbose {
        write(&out.join("frames.csv"), &frames_csv)?;
    }
    Ok(())
}

fn solve(path: &Path, solver: SolverChoice) -> Result<(), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read instance {}: {e}", path.display())))?;
    let problem =
        parse_instance(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let (assignment, name) = match solver {
        SolverChoice::Exact => (exact_solve(&problem), "exact"),
        SolverChoice::Greedy => (greedy_solve(&problem), "greedy"),
        SolverChoice::Brute => (
            brute_force_solve(&problem).map_err(|e| Failure::Runtime(e.to_string()))?,
            "brute",
        ),
    };
    print!("{}", format_assignment(&problem, &assignment, name));
    Ok(())
}

fn sweep(
    config: &Path,
    param: &str,
    values: &[String],
    seeds: &[u64],
    out: &Path,
) -> Result<(), Failure> {
    let base = load_config(config)?;
    let mut cells = Vec::new();
    for value in values {
        let mut cfg = base.clone();
        cfg.set(param, value)
            .and_then(|()| cfg.validate())
            .map_err(|e: ConfigError| Failure::Config(e.to_string()))?;
        for &seed in seeds {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            let dir = out
                .join(format!("{param}={value}"))
                .join(format!("seed={seed}"));
            cells.push((cfg, dir));
        }
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    for chunk in cells.chunks(workers) {
        let results: Vec<Result<(), Failure>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(cfg, dir)| scope.spawn(move || run_to_dir(cfg, dir, false)))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(Failure::Runtime("sweep worker panicked".into())))
                })
                .collect()
        });
        results.into_iter().collect::<Result<Vec<()>, Failure>>()?;
    }
    Ok(())
}
