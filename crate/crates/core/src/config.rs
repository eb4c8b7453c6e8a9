//! Simulation configuration and the `key = value` config file format.
//!
//! Keys are the camelCase field names of [`ModelParameters`] and
//! [`SimulationConfig`]. The spellings `basicDeathRate`, `femaleAgeDieRate`
//! and `maleAgeDieRate` are accepted as aliases. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, SimError};
use crate::params::{FertilitySource, ModelParameters};
use crate::space::DEFAULT_HOUSE_GRID;
use crate::stochastics::{ClockSpec, DEFAULT_MAX_INITIAL_AGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Ageing,
    Deaths,
    Births,
    Divorces,
    Marriages,
}

impl EventKind {
    pub const DEFAULT_ORDER: [EventKind; 5] =
        [EventKind::Ageing, EventKind::Deaths, EventKind::Births, EventKind::Divorces, EventKind::Marriages];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Ageing => "ageing",
            EventKind::Deaths => "deaths",
            EventKind::Births => "births",
            EventKind::Divorces => "divorces",
            EventKind::Marriages => "marriages",
        }
    }
}

impl FromStr for EventKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ageing" | "aging" => Ok(EventKind::Ageing),
            "deaths" => Ok(EventKind::Deaths),
            "births" => Ok(EventKind::Births),
            "divorces" => Ok(EventKind::Divorces),
            "marriages" => Ok(EventKind::Marriages),
            other => Err(SimError::Config(format!("unknown event `{other}`"))),
        }
    }
}

pub fn parse_event_order(s: &str) -> Result<Vec<EventKind>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub t0: i32,
    pub t_final: i32,
    pub clock: ClockSpec,
    pub seed: u64,
    /// Events applied each step, ageing first. Events left out are disabled.
    pub event_order: Vec<EventKind>,
    pub output_dir: PathBuf,
    pub fertility: FertilitySource,
    /// Optional density map override; `None` uses the built-in map.
    pub density_map: Option<PathBuf>,
    pub house_grid_size: u32,
    pub max_initial_age: u32,
    /// Emit statistics every k-th step (the initial and final states are
    /// always emitted).
    pub stats_every: u32,
    pub audit: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t0: 2020,
            t_final: 2030,
            clock: ClockSpec::daily(),
            seed: 0,
            event_order: EventKind::DEFAULT_ORDER.to_vec(),
            output_dir: PathBuf::from("out"),
            fertility: FertilitySource::Synthetic,
            density_map: None,
            house_grid_size: DEFAULT_HOUSE_GRID,
            max_initial_age: DEFAULT_MAX_INITIAL_AGE,
            stats_every: 1,
            audit: false,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_final < self.t0 {
            return Err(SimError::Config(format!("tFinal {} precedes t0 {}", self.t_final, self.t0)));
        }
        if self.event_order.first() != Some(&EventKind::Ageing) {
            return Err(SimError::Config("eventOrder must start with ageing".into()));
        }
        for (i, e) in self.event_order.iter().enumerate() {
            if self.event_order[..i].contains(e) {
                return Err(SimError::Config(format!("event {} listed twice", e.as_str())));
            }
        }
        if self.stats_every == 0 {
            return Err(SimError::Config("statsEvery must be at least 1".into()));
        }
        if self.house_grid_size == 0 {
            return Err(SimError::Config("houseGridSize must be at least 1".into()));
        }
        if self.max_initial_age == 0 {
            return Err(SimError::Config("maxInitialAge must be at least 1".into()));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        (self.t_final - self.t0).max(0) as u64 * self.clock.steps_per_year() as u64
    }

    /// Decimal calendar time after `step` steps.
    pub fn time_at(&self, step: u64) -> f64 {
        self.t0 as f64 + self.clock.years(step)
    }

    /// Whole calendar year during step `step`.
    pub fn year_at(&self, step: u64) -> i32 {
        self.t0 + (step / self.clock.steps_per_year() as u64) as i32
    }
}

/// A complete run description: simulation settings plus model parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub sim: SimulationConfig,
    pub params: ModelParameters,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.params.validate()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| SimError::Config(format!("bad value `{value}` for {key}")))
        }
        let p = &mut self.params;
        let s = &mut self.sim;
        match key {
            "basicDivorceRate" => p.basic_divorce_rate = num(key, value)?,
            "baseDieRate" | "basicDeathRate" => p.base_die_rate = num(key, value)?,
            "basicMaleMarriageRate" => p.basic_male_marriage_rate = num(key, value)?,
            "femaleAgeDieProb" | "femaleAgeDieRate" => p.female_age_die_prob = num(key, value)?,
            "femaleAgeScaling" => p.female_age_scaling = num(key, value)?,
            "initialPop" => p.initial_pop = num(key, value)?,
            "maleAgeDieProb" | "maleAgeDieRate" => p.male_age_die_prob = num(key, value)?,
            "maleAgeScaling" => p.male_age_scaling = num(key, value)?,
            "maxNumMarrCand" => p.max_num_marr_cand = num(key, value)?,
            "startMarriedRate" => p.start_married_rate = num(key, value)?,
            "t0" => s.t0 = num(key, value)?,
            "tFinal" => s.t_final = num(key, value)?,
            "clock" => s.clock = value.parse()?,
            "seed" => s.seed = num(key, value)?,
            "eventOrder" => s.event_order = parse_event_order(value)?,
            "outputDir" => s.output_dir = PathBuf::from(value),
            "fertility" => s.fertility = FertilitySource::parse(value),
            "densityMap" => {
                s.density_map = match value {
                    "" | "default" => None,
                    path => Some(PathBuf::from(path)),
                }
            }
            "houseGridSize" => s.house_grid_size = num(key, value)?,
            "maxInitialAge" => s.max_initial_age = num(key, value)?,
            "statsEvery" => s.stats_every = num(key, value)?,
            "audit" => s.audit = num(key, value)?,
            _ => return Err(SimError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SimError::parse(origin, n + 1, "expected `key = value`"))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| SimError::parse(origin, n + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.params;
        let s = &self.sim;
        writeln!(f, "# model parameters")?;
        writeln!(f, "basicDivorceRate = {}", p.basic_divorce_rate)?;
        writeln!(f, "baseDieRate = {}", p.base_die_rate)?;
        writeln!(f, "basicMaleMarriageRate = {}", p.basic_male_marriage_rate)?;
        writeln!(f, "femaleAgeDieProb = {}", p.female_age_die_prob)?;
        writeln!(f, "femaleAgeScaling = {}", p.female_age_scaling)?;
        writeln!(f, "initialPop = {}", p.initial_pop)?;
        writeln!(f, "maleAgeDieProb = {}", p.male_age_die_prob)?;
        writeln!(f, "maleAgeScaling = {}", p.male_age_scaling)?;
        writeln!(f, "maxNumMarrCand = {}", p.max_num_marr_cand)?;
        writeln!(f, "startMarriedRate = {}", p.start_married_rate)?;
        writeln!(f)?;
        writeln!(f, "# simulation")?;
        writeln!(f, "t0 = {}", s.t0)?;
        writeln!(f, "tFinal = {}", s.t_final)?;
        writeln!(f, "clock = {}", s.clock)?;
        writeln!(f, "seed = {}", s.seed)?;
        let order: Vec<&str> = s.event_order.iter().map(|e| e.as_str()).collect();
        writeln!(f, "eventOrder = {}", order.join(","))?;
        writeln!(f, "outputDir = {}", s.output_dir.display())?;
        writeln!(f, "fertility = {}", s.fertility)?;
        match &s.density_map {
            Some(path) => writeln!(f, "densityMap = {}", path.display())?,
            None => writeln!(f, "densityMap = default")?,
        }
        writeln!(f, "houseGridSize = {}", s.house_grid_size)?;
        writeln!(f, "maxInitialAge = {}", s.max_initial_age)?;
        writeln!(f, "statsEvery = {}", s.stats_every)?;
        writeln!(f, "audit = {}", s.audit)
    }
}
