//! Model parameters and input data trajectories.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::population::Gender;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub basic_divorce_rate: f64,
    pub base_die_rate: f64,
    pub basic_male_marriage_rate: f64,
    pub female_age_die_prob: f64,
    pub female_age_scaling: f64,
    pub initial_pop: u64,
    pub male_age_die_prob: f64,
    pub male_age_scaling: f64,
    pub max_num_marr_cand: usize,
    pub start_married_rate: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self {
            basic_divorce_rate: 0.06,
            base_die_rate: 0.0001,
            basic_male_marriage_rate: 0.7,
            female_age_die_prob: 0.00019,
            female_age_scaling: 15.5,
            initial_pop: 10_000,
            male_age_die_prob: 0.00021,
            male_age_scaling: 14.0,
            max_num_marr_cand: 100,
            start_married_rate: 0.8,
        }
    }
}

impl ModelParameters {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("basicDivorceRate", self.basic_divorce_rate),
            ("baseDieRate", self.base_die_rate),
            ("basicMaleMarriageRate", self.basic_male_marriage_rate),
            ("femaleAgeDieProb", self.female_age_die_prob),
            ("maleAgeDieProb", self.male_age_die_prob),
            ("startMarriedRate", self.start_married_rate),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::Config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        for (name, v) in [("femaleAgeScaling", self.female_age_scaling), ("maleAgeScaling", self.male_age_scaling)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.initial_pop < 1 {
            return Err(SimError::Config("initialPop must be at least 1".into()));
        }
        if self.max_num_marr_cand < 1 {
            return Err(SimError::Config("maxNumMarrCand must be at least 1".into()));
        }
        Ok(())
    }

    /// Yearly death probability: base rate plus a gendered exponential in
    /// age. Not clamped; callers cap it at one.
    pub fn death_probability_yearly(&self, gender: Gender, age_years: f64) -> f64 {
        let (scaling, prob) = match gender {
            Gender::Male => (self.male_age_scaling, self.male_age_die_prob),
            Gender::Female => (self.female_age_scaling, self.female_age_die_prob),
        };
        self.base_die_rate + libm::exp(age_years / scaling) * prob
    }
}

pub const DECADE_SLOTS: usize = 16;

pub const DEFAULT_DIVORCE_MODIFIER: [f64; DECADE_SLOTS] =
    [0.0, 1.0, 0.9, 0.5, 0.4, 0.2, 0.1, 0.03, 0.01, 0.001, 0.001, 0.001, 0.0, 0.0, 0.0, 0.0];

pub const DEFAULT_MALE_MARRIAGE_MODIFIER: [f64; DECADE_SLOTS] =
    [0.0, 0.16, 0.5, 1.0, 0.8, 0.7, 0.66, 0.5, 0.4, 0.2, 0.1, 0.05, 0.01, 0.0, 0.0, 0.0];

/// Slot of a decade-modifier vector for an age: `ceil(age / 10)` clamped to
/// `1..=16`, returned as a zero-based index.
pub fn decade_index(age_steps: u64, steps_per_year: u32) -> usize {
    let decade = 10 * steps_per_year as u64;
    let slot = age_steps.div_ceil(decade).clamp(1, DECADE_SLOTS as u64);
    slot as usize - 1
}

pub const FERTILITY_FIRST_AGE: u32 = 17;
pub const FERTILITY_LAST_AGE: u32 = 51;
pub const FERTILITY_FIRST_YEAR: i32 = 1951;
pub const FERTILITY_LAST_YEAR: i32 = 2050;
pub const FERTILITY_AGES: usize = (FERTILITY_LAST_AGE - FERTILITY_FIRST_AGE + 1) as usize;
pub const FERTILITY_YEARS: usize = (FERTILITY_LAST_YEAR - FERTILITY_FIRST_YEAR + 1) as usize;

const FERTILITY_HEADER: &str = "ages 17..51 years 1951..2050";

/// Synthetic profile parameters. Not empirical data.
pub const SYNTHETIC_PEAK_AGE: f64 = 29.0;
pub const SYNTHETIC_PEAK_RATE: f64 = 0.25;
pub const SYNTHETIC_WIDTH_YEARS: f64 = 6.0;

/// Yearly fertility rates by woman's age (17..=51) and calendar year
/// (1951..=2050).
#[derive(Debug, Clone, PartialEq)]
pub struct FertilityTable {
    // row-major, FERTILITY_AGES rows of FERTILITY_YEARS columns
    rates: Vec<f64>,
}

impl FertilityTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != FERTILITY_AGES {
            return Err(SimError::Config(format!("fertility table needs {FERTILITY_AGES} rows, got {}", rows.len())));
        }
        let mut rates = Vec::with_capacity(FERTILITY_AGES * FERTILITY_YEARS);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != FERTILITY_YEARS {
                return Err(SimError::Config(format!(
                    "fertility row {} has {} columns, expected {FERTILITY_YEARS}",
                    i + 1,
                    row.len()
                )));
            }
            rates.extend(row);
        }
        if let Some(bad) = rates.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(SimError::Config(format!("fertility rate {bad} outside [0, 1]")));
        }
        Ok(Self { rates })
    }

    /// Gaussian age profile peaking at 29 with yearly rate 0.25, identical
    /// for every year.
    pub fn synthetic() -> Self {
        let mut rates = Vec::with_capacity(FERTILITY_AGES * FERTILITY_YEARS);
        for age in FERTILITY_FIRST_AGE..=FERTILITY_LAST_AGE {
            let z = (age as f64 - SYNTHETIC_PEAK_AGE) / SYNTHETIC_WIDTH_YEARS;
            let rate = SYNTHETIC_PEAK_RATE * libm::exp(-0.5 * z * z);
            rates.extend(std::iter::repeat_n(rate, FERTILITY_YEARS));
        }
        Self { rates }
    }

    /// Rate for a whole-year age and calendar year; zero outside the table.
    pub fn rate(&self, age_years: u32, year: i32) -> f64 {
        if !(FERTILITY_FIRST_AGE..=FERTILITY_LAST_AGE).contains(&age_years)
            || !(FERTILITY_FIRST_YEAR..=FERTILITY_LAST_YEAR).contains(&year)
        {
            return 0.0;
        }
        let row = (age_years - FERTILITY_FIRST_AGE) as usize;
        let col = (year - FERTILITY_FIRST_YEAR) as usize;
        self.rates[row * FERTILITY_YEARS + col]
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, l)) if l.split_whitespace().collect::<Vec<_>>().join(" ") == FERTILITY_HEADER => {}
            Some((n, _)) => {
                return Err(SimError::parse(origin, n + 1, format!("expected header `{FERTILITY_HEADER}`")))
            }
            None => return Err(SimError::parse(origin, 1, "empty fertility table")),
        }
        let mut rows = Vec::new();
        for (n, line) in lines {
            let row = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| SimError::parse(origin, n + 1, format!("bad decimal `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != FERTILITY_YEARS {
                return Err(SimError::parse(
                    origin,
                    n + 1,
                    format!("expected {FERTILITY_YEARS} values, found {}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != FERTILITY_AGES {
            return Err(SimError::parse(origin, 0, format!("expected {FERTILITY_AGES} rows, found {}", rows.len())));
        }
        Self::from_rows(rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(FERTILITY_HEADER);
        out.push('\n');
        for row in self.rates.chunks(FERTILITY_YEARS) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                // shortest representation that parses back to the same bits
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| SimError::io(path, e))
    }
}

/// Where the fertility table comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FertilitySource {
    Synthetic,
    File(std::path::PathBuf),
}

impl FertilitySource {
    pub fn parse(s: &str) -> Self {
        match s.trim() {
            "synthetic" | "SYNTHETIC" => FertilitySource::Synthetic,
            other => FertilitySource::File(other.into()),
        }
    }
}

impl std::fmt::Display for FertilitySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FertilitySource::Synthetic => f.write_str("synthetic"),
            FertilitySource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

pub fn load_fertility_table(source: &FertilitySource) -> Result<FertilityTable> {
    match source {
        FertilitySource::Synthetic => Ok(FertilityTable::synthetic()),
        FertilitySource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
            FertilityTable::parse(&text, &path.display().to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataTables {
    pub divorce_modifier_by_decade: [f64; DECADE_SLOTS],
    pub male_marriage_modifier_by_decade: [f64; DECADE_SLOTS],
    pub fertility: FertilityTable,
}

impl Default for DataTables {
    fn default() -> Self {
        Self {
            divorce_modifier_by_decade: DEFAULT_DIVORCE_MODIFIER,
            male_marriage_modifier_by_decade: DEFAULT_MALE_MARRIAGE_MODIFIER,
            fertility: FertilityTable::synthetic(),
        }
    }
}

impl DataTables {
    pub fn with_fertility(fertility: FertilityTable) -> Self {
        Self { fertility, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for v in self.divorce_modifier_by_decade.iter().chain(&self.male_marriage_modifier_by_decade) {
            if !(0.0..=1.0).contains(v) {
                return Err(SimError::Config(format!("decade modifier {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn divorce_modifier(&self, age_steps: u64, steps_per_year: u32) -> f64 {
        self.divorce_modifier_by_decade[decade_index(age_steps, steps_per_year)]
    }

    pub fn male_marriage_modifier(&self, age_steps: u64, steps_per_year: u32) -> f64 {
        self.male_marriage_modifier_by_decade[decade_index(age_steps, steps_per_year)]
    }
}
