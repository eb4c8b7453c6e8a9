use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use demosim_core::engine::{run_replicates, write_replicates, write_run, Simulation};
use demosim_core::{check_invariants, load_fertility_table, ClockSpec, DataTables, FertilitySource, RunConfig};

/// Agent-based demographic simulation.
#[derive(Parser)]
#[command(name = "demosim", version, about)]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write statistics and the final population.
    Run {
        #[command(flatten)]
        settings: Settings,
        /// Check every invariant after every step.
        #[arg(long)]
        audit: bool,
        /// Number of independent runs with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        replicates: u32,
        /// Emit statistics every k-th step only.
        #[arg(long, value_name = "K")]
        stats_every: Option<u32>,
    },
    /// Load the configuration and tables, build the initial state, and check it.
    Validate {
        #[command(flatten)]
        settings: Settings,
    },
    /// Write the default configuration as a config file.
    ExportDefaults {
        /// Destination file; standard output when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

/// Settings shared by `run` and `validate`. Flags override the config file.
#[derive(Args)]
struct Settings {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Step size: hourly, daily, weekly, monthly or custom:N.
    #[arg(long, value_name = "CLOCK")]
    dt: Option<ClockSpec>,
    #[arg(long, value_name = "YEAR", allow_negative_numbers = true)]
    t0: Option<i32>,
    #[arg(long, value_name = "YEAR", allow_negative_numbers = true)]
    tfinal: Option<i32>,
    #[arg(long, value_name = "N")]
    initial_pop: Option<u64>,
    /// Fertility table file, or `synthetic`.
    #[arg(long, value_name = "PATH|synthetic")]
    fertility: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Settings {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let s = &mut cfg.sim;
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.dt {
            s.clock = v;
        }
        if let Some(v) = self.t0 {
            s.t0 = v;
        }
        if let Some(v) = self.tfinal {
            s.t_final = v;
        }
        if let Some(v) = &self.fertility {
            s.fertility = FertilitySource::parse(v);
        }
        if let Some(v) = &self.out {
            s.output_dir = v.clone();
        }
        if let Some(v) = self.initial_pop {
            cfg.params.initial_pop = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_tables(cfg: &RunConfig) -> Result<DataTables> {
    let fertility = load_fertility_table(&cfg.sim.fertility)
        .with_context(|| format!("loading fertility table `{}`", cfg.sim.fertility))?;
    Ok(DataTables::with_fertility(fertility))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(mut cfg: RunConfig, audit: bool, replicates: u32, stats_every: Option<u32>) -> Result<()> {
    cfg.sim.audit |= audit;
    if let Some(k) = stats_every {
        cfg.sim.stats_every = k;
    }
    cfg.validate()?;
    let tables = load_tables(&cfg)?;
    let dir = cfg.sim.output_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_text(&dir.join("run.cfg"), &cfg.to_string())?;
    let runs = run_replicates(&cfg.sim, &cfg.params, &tables, replicates)?;
    if replicates == 1 {
        write_run(&dir, &runs[0], "")?;
    } else {
        write_replicates(&dir, &runs)?;
    }
    for r in &runs {
        let last = r.statistics.last().expect("initial statistics are always recorded");
        println!("seed {}: {} steps, {} alive, {} houses", r.seed, last.step, last.alive, last.houses);
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn validate(cfg: RunConfig) -> Result<()> {
    let tables = load_tables(&cfg)?;
    let sim = Simulation::new(cfg.sim, cfg.params, tables)?;
    let report = check_invariants(sim.store(), sim.space());
    if !report.is_ok() {
        bail!("initial state violates invariants:\n{report}");
    }
    let r = sim.init_report();
    println!(
        "ok: {} persons, {} couples, {} houses; {} males left unmatched, {} children with relaxed parent ages, \
         {} without parents",
        sim.store().len(),
        r.couples,
        sim.space().house_count(),
        r.unmatched_males,
        r.relaxed_children,
        r.parentless_children
    );
    Ok(())
}

fn export_defaults(out: Option<PathBuf>) -> Result<()> {
    let text = RunConfig::default().to_string();
    match out {
        Some(path) => write_text(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Run { settings, audit, replicates, stats_every } => {
            settings.resolve().and_then(|cfg| run(cfg, audit, replicates, stats_every))
        }
        Command::Validate { settings } => settings.resolve().and_then(validate),
        Command::ExportDefaults { out } => export_defaults(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
