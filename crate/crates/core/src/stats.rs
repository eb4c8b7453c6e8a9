//! Per-step summary statistics and their CSV encoding.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::events::StepEventLog;
use crate::population::{Gender, MaritalStatus, PopulationStore};
use crate::space::Space;

pub const CSV_HEADER: &str = "step,time,alive,males,females,married,single,divorced,widowed,mean_age,births,deaths,\
marriages,divorces,orphan_relocations,divorce_relocations,houses,occupied_houses";

#[derive(Debug, Clone, PartialEq)]
pub struct StepStatistics {
    pub step: u64,
    /// Decimal calendar years.
    pub time: f64,
    pub alive: u64,
    pub males: u64,
    pub females: u64,
    pub married: u64,
    pub single: u64,
    pub divorced: u64,
    pub widowed: u64,
    /// Mean age of the living in years; zero for an empty population.
    pub mean_age: f64,
    pub births: u64,
    pub deaths: u64,
    pub marriages: u64,
    pub divorces: u64,
    pub orphan_relocations: u64,
    pub divorce_relocations: u64,
    pub houses: u64,
    pub occupied_houses: u64,
}

/// Exact counts by a full sweep over the store and the houses.
pub fn collect_step_statistics(
    store: &PopulationStore,
    space: &Space,
    log: &StepEventLog,
    step: u64,
    time: f64,
) -> StepStatistics {
    let mut s = StepStatistics {
        step,
        time,
        alive: 0,
        males: 0,
        females: 0,
        married: 0,
        single: 0,
        divorced: 0,
        widowed: 0,
        mean_age: 0.0,
        births: log.birth_count() as u64,
        deaths: log.death_count() as u64,
        marriages: log.marriage_count() as u64,
        divorces: log.divorce_count() as u64,
        orphan_relocations: log.orphan_relocation_count() as u64,
        divorce_relocations: log.divorce_relocation_count() as u64,
        houses: space.house_count() as u64,
        occupied_houses: 0,
    };
    let mut age_sum: u128 = 0;
    for p in store.alive() {
        s.alive += 1;
        match p.gender() {
            Gender::Male => s.males += 1,
            Gender::Female => s.females += 1,
        }
        match p.marital_status() {
            MaritalStatus::Married => s.married += 1,
            MaritalStatus::Single => s.single += 1,
            MaritalStatus::Divorced => s.divorced += 1,
            MaritalStatus::Widowed => s.widowed += 1,
        }
        age_sum += p.age_steps() as u128;
    }
    if s.alive > 0 {
        s.mean_age = age_sum as f64 / s.alive as f64 / store.clock().steps_per_year() as f64;
    }
    s.occupied_houses = space.houses().iter().filter(|h| !h.is_empty()).count() as u64;
    s
}

/// Six significant digits, plain decimal notation.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // round in scientific form first so a carry (9.999996 -> 10.0000) moves
    // the exponent before the decimals are chosen
    let sci = format!("{x:.5e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

impl StepStatistics {
    pub fn to_csv_row(&self) -> String {
        let counts = [
            self.alive,
            self.males,
            self.females,
            self.married,
            self.single,
            self.divorced,
            self.widowed,
        ];
        let mut row = format!("{},{}", self.step, format_sig6(self.time));
        for c in counts {
            let _ = write!(row, ",{c}");
        }
        let _ = write!(row, ",{}", format_sig6(self.mean_age));
        for c in self.event_and_house_counts() {
            let _ = write!(row, ",{c}");
        }
        row
    }

    fn event_and_house_counts(&self) -> [u64; 8] {
        [
            self.births,
            self.deaths,
            self.marriages,
            self.divorces,
            self.orphan_relocations,
            self.divorce_relocations,
            self.houses,
            self.occupied_houses,
        ]
    }

    /// Every column as a number, in header order.
    pub fn columns(&self) -> Vec<f64> {
        let mut v = vec![
            self.step as f64,
            self.time,
            self.alive as f64,
            self.males as f64,
            self.females as f64,
            self.married as f64,
            self.single as f64,
            self.divorced as f64,
            self.widowed as f64,
            self.mean_age,
        ];
        v.extend(self.event_and_house_counts().map(|c| c as f64));
        v
    }
}

pub fn statistics_csv(stats: &[StepStatistics]) -> String {
    let mut out = String::with_capacity(64 * (stats.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&s.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn write_statistics(path: &Path, stats: &[StepStatistics]) -> Result<()> {
    std::fs::write(path, statistics_csv(stats)).map_err(|e| SimError::io(path, e))
}

/// Mean and sample variance of every column across replicate runs, row by
/// row. All runs must have the same number of rows.
pub fn replicate_summary_csv(runs: &[Vec<StepStatistics>]) -> String {
    let columns: Vec<&str> = CSV_HEADER.split(',').collect();
    let mut out = String::new();
    for (i, c) in columns.iter().enumerate() {
        if i > 1 {
            let _ = write!(out, ",{c}_mean,{c}_var");
        } else {
            if i > 0 {
                out.push(',');
            }
            out.push_str(c);
        }
    }
    out.push('\n');
    let Some(rows) = runs.iter().map(Vec::len).min() else {
        return out;
    };
    let r = runs.len() as f64;
    for row in 0..rows {
        let cols: Vec<Vec<f64>> = runs.iter().map(|run| run[row].columns()).collect();
        let _ = write!(out, "{},{}", runs[0][row].step, format_sig6(runs[0][row].time));
        for c in 2..columns.len() {
            let mean = cols.iter().map(|v| v[c]).sum::<f64>() / r;
            let var = if runs.len() > 1 {
                cols.iter().map(|v| (v[c] - mean).powi(2)).sum::<f64>() / (r - 1.0)
            } else {
                0.0
            };
            let _ = write!(out, ",{},{}", format_sig6(mean), format_sig6(var));
        }
        out.push('\n');
    }
    out
}
