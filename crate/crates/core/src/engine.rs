//! The step loop, run drivers, and output files.

use std::path::Path;

use rayon::prelude::*;

use crate::audit::check_invariants;
use crate::config::{EventKind, SimulationConfig};
use crate::error::{Result, SimError};
use crate::events::{self, EventContext, StepEventLog};
use crate::export::export_population;
use crate::features::StepSnapshot;
use crate::init::{initialize, InitReport};
use crate::params::{DataTables, ModelParameters};
use crate::population::{MaritalStatus, PopulationStore};
use crate::space::{DensityMap, Space};
use crate::stats::{collect_step_statistics, replicate_summary_csv, write_statistics, StepStatistics};
use crate::stochastics::SimRng;

pub struct Simulation {
    config: SimulationConfig,
    params: ModelParameters,
    tables: DataTables,
    store: PopulationStore,
    space: Space,
    rng: SimRng,
    prev: StepSnapshot,
    steps_done: u64,
    init_report: InitReport,
}

impl Simulation {
    /// Validates the inputs and builds the initial population.
    pub fn new(config: SimulationConfig, params: ModelParameters, tables: DataTables) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        tables.validate()?;
        let density = match &config.density_map {
            Some(path) => DensityMap::load(path)?,
            None => DensityMap::default(),
        };
        let mut space = Space::new(density, config.house_grid_size);
        let mut rng = SimRng::seed_from(config.seed);
        let (store, init_report) = initialize(&params, config.clock, config.max_initial_age, &mut space, &mut rng)?;
        let sim = Self::assemble(config, params, tables, store, space, rng, init_report);
        if sim.config.audit {
            sim.audit_structure()?;
        }
        Ok(sim)
    }

    /// Starts from a hand-built state instead of the random initialization.
    pub fn from_state(
        config: SimulationConfig,
        params: ModelParameters,
        tables: DataTables,
        store: PopulationStore,
        space: Space,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        tables.validate()?;
        if store.clock() != config.clock {
            return Err(SimError::Config("store clock differs from the configured clock".into()));
        }
        let rng = SimRng::seed_from(config.seed);
        Ok(Self::assemble(config, params, tables, store, space, rng, InitReport::default()))
    }

    fn assemble(
        config: SimulationConfig,
        params: ModelParameters,
        tables: DataTables,
        store: PopulationStore,
        space: Space,
        rng: SimRng,
        init_report: InitReport,
    ) -> Self {
        let prev = StepSnapshot::capture(&store, &space);
        Self { config, params, tables, store, space, rng, prev, steps_done: 0, init_report }
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn params(&self) -> &ModelParameters {
        &self.params
    }

    pub fn tables(&self) -> &DataTables {
        &self.tables
    }

    pub fn store(&self) -> &PopulationStore {
        &self.store
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn init_report(&self) -> &InitReport {
        &self.init_report
    }

    /// State at the start of the last step (the initial state before any).
    pub fn previous_snapshot(&self) -> &StepSnapshot {
        &self.prev
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub fn time(&self) -> f64 {
        self.config.time_at(self.steps_done)
    }

    pub fn is_finished(&self) -> bool {
        self.steps_done >= self.config.total_steps()
    }

    pub fn statistics(&self, log: &StepEventLog) -> StepStatistics {
        collect_step_statistics(&self.store, &self.space, log, self.steps_done, self.time())
    }

    pub fn into_parts(self) -> (PopulationStore, Space) {
        (self.store, self.space)
    }

    pub fn step(&mut self) -> Result<StepEventLog> {
        self.step_observed(|_, _, _, _| {})
    }

    /// One step. `observe` sees the state right before each event runs.
    pub fn step_observed(
        &mut self,
        mut observe: impl FnMut(EventKind, &PopulationStore, &Space, &StepSnapshot),
    ) -> Result<StepEventLog> {
        self.prev = StepSnapshot::capture(&self.store, &self.space);
        let alive_before = self.store.alive_count();
        let houses_before = self.space.house_count();
        let year = self.config.year_at(self.steps_done);
        let mut log = StepEventLog::default();
        for i in 0..self.config.event_order.len() {
            let kind = self.config.event_order[i];
            observe(kind, &self.store, &self.space, &self.prev);
            let ctx = EventContext { params: &self.params, tables: &self.tables, prev: &self.prev, year };
            let (store, space, rng) = (&mut self.store, &mut self.space, &mut self.rng);
            match kind {
                EventKind::Ageing => events::ageing_step(store, space, rng, &mut log)?,
                EventKind::Deaths => events::deaths_step(store, space, ctx, rng, &mut log)?,
                EventKind::Births => events::births_step(store, space, ctx, rng, &mut log)?,
                EventKind::Divorces => events::divorces_step(store, space, ctx, rng, &mut log)?,
                EventKind::Marriages => events::marriages_step(store, space, ctx, rng, &mut log)?,
            }
        }
        self.steps_done += 1;
        if self.config.audit {
            self.audit_step(&log, alive_before, houses_before)?;
        }
        Ok(log)
    }

    fn fail(&self, details: String) -> SimError {
        SimError::Audit { step: self.steps_done, details }
    }

    fn audit_structure(&self) -> Result<()> {
        let report = check_invariants(&self.store, &self.space);
        if report.is_ok() {
            Ok(())
        } else {
            Err(self.fail(report.to_string()))
        }
    }

    fn audit_step(&self, log: &StepEventLog, alive_before: usize, houses_before: usize) -> Result<()> {
        self.audit_structure()?;
        let alive = self.store.alive_count();
        if alive + log.death_count() != alive_before + log.birth_count() {
            return Err(self.fail(format!(
                "population not conserved: {alive_before} + {} births - {} deaths != {alive}",
                log.birth_count(),
                log.death_count()
            )));
        }
        if self.space.house_count() < houses_before {
            return Err(self.fail(format!("house count fell from {houses_before} to {}", self.space.house_count())));
        }
        // the logged counts against what a sweep finds
        let now = self.store.current_step();
        let born = self.store.iter().filter(|p| p.birth_step() == now && !self.prev.contains(p.id())).count();
        let died =
            self.store.iter().filter(|p| !p.is_alive() && self.prev.alive(p.id()) == Some(true)).count();
        if born != log.birth_count() || died != log.death_count() {
            return Err(self.fail(format!(
                "event log says {} births / {} deaths, sweep finds {born} / {died}",
                log.birth_count(),
                log.death_count()
            )));
        }
        let stats = self.statistics(log);
        let married = self.store.alive().filter(|p| p.marital_status() == MaritalStatus::Married).count() as u64;
        if stats.married != married || !married.is_multiple_of(2) || stats.alive != stats.males + stats.females {
            return Err(self.fail(format!("inconsistent statistics {stats:?}")));
        }
        Ok(())
    }
}

/// Statistics rows plus the final state of one run.
pub struct RunOutput {
    pub seed: u64,
    pub statistics: Vec<StepStatistics>,
    pub store: PopulationStore,
    pub space: Space,
    pub init_report: InitReport,
}

/// Initializes and runs to `t_final`. Statistics are recorded for the
/// initial state and then after every `stats_every`-th step and the last.
pub fn run_simulation(config: &SimulationConfig, params: &ModelParameters, tables: &DataTables) -> Result<RunOutput> {
    let mut sim = Simulation::new(config.clone(), params.clone(), tables.clone())?;
    let every = config.stats_every as u64;
    let mut statistics = vec![sim.statistics(&StepEventLog::default())];
    while !sim.is_finished() {
        let log = sim.step()?;
        if sim.steps_done() % every == 0 || sim.is_finished() {
            statistics.push(sim.statistics(&log));
        }
        if sim.steps_done() % sim.config().clock.steps_per_year() as u64 == 0 {
            log::info!("seed {}: year {:.0}, {} alive", config.seed, sim.time(), sim.store().alive_count());
        }
    }
    let init_report = sim.init_report().clone();
    let (store, space) = sim.into_parts();
    Ok(RunOutput { seed: config.seed, statistics, store, space, init_report })
}

/// `replicates` independent runs with seeds `seed, seed + 1, ...`, in
/// parallel. Results come back in seed order.
pub fn run_replicates(
    config: &SimulationConfig,
    params: &ModelParameters,
    tables: &DataTables,
    replicates: u32,
) -> Result<Vec<RunOutput>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SimulationConfig { seed: config.seed.wrapping_add(i), ..config.clone() };
            run_simulation(&cfg, params, tables)
        })
        .collect()
}

pub const STATISTICS_FILE: &str = "statistics.csv";
pub const POPULATION_FILE: &str = "population.txt";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Writes `statistics{suffix}.csv` and `population{suffix}.txt` into `dir`.
pub fn write_run(dir: &Path, run: &RunOutput, suffix: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    write_statistics(&dir.join(format!("statistics{suffix}.csv")), &run.statistics)?;
    export_population(&run.store, &run.space, &dir.join(format!("population{suffix}.txt")))
}

/// Per-replicate files `statistics_rK.csv` / `population_rK.txt` and a
/// `summary.csv` of column means and variances.
pub fn write_replicates(dir: &Path, runs: &[RunOutput]) -> Result<()> {
    for (i, run) in runs.iter().enumerate() {
        write_run(dir, run, &format!("_r{i}"))?;
    }
    let stats: Vec<Vec<StepStatistics>> = runs.iter().map(|r| r.statistics.clone()).collect();
    let path = dir.join(SUMMARY_FILE);
    std::fs::write(&path, replicate_summary_csv(&stats)).map_err(|e| SimError::io(path, e))
}
