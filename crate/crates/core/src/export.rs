//! Line-oriented population dump.
//!
//! One person per line, comma-separated, in this order:
//!
//! `id,gender,age_steps,alive,status,partner,father,mother,children,house,town`
//!
//! Missing references are written as `-`. Children are `;`-separated ids.
//! Dead persons have house `grave` and town `-`; otherwise town is `row:col`.
//! Lines starting with `#` are comments.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::audit::InvariantReport;
use crate::error::{Result, SimError};
use crate::population::{Gender, MaritalStatus, PersonId, PopulationStore};
use crate::space::{HouseId, Space, TownId};

pub const EXPORT_HEADER: &str = "# id,gender,age_steps,alive,status,partner,father,mother,children,house,town";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonRecord {
    pub id: PersonId,
    pub gender: Gender,
    pub age_steps: u64,
    pub alive: bool,
    pub status: MaritalStatus,
    pub partner: Option<PersonId>,
    pub father: Option<PersonId>,
    pub mother: Option<PersonId>,
    pub children: Vec<PersonId>,
    /// `None` is the grave.
    pub house: Option<HouseId>,
    pub town: Option<TownId>,
}

pub fn records(store: &PopulationStore, space: &Space) -> Vec<PersonRecord> {
    store
        .iter()
        .map(|p| PersonRecord {
            id: p.id(),
            gender: p.gender(),
            age_steps: p.age_steps(),
            alive: p.is_alive(),
            status: p.marital_status(),
            partner: p.partner(),
            father: p.father(),
            mother: p.mother(),
            children: p.children().to_vec(),
            house: p.house(),
            town: p.house().map(|h| space.town_of(h)),
        })
        .collect()
}

fn opt_id(id: Option<PersonId>) -> String {
    id.map_or_else(|| "-".to_string(), |p| p.0.to_string())
}

pub fn records_to_text(records: &[PersonRecord]) -> String {
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(EXPORT_HEADER);
    out.push('\n');
    for r in records {
        let children: Vec<String> = r.children.iter().map(|c| c.0.to_string()).collect();
        let children = if children.is_empty() { "-".to_string() } else { children.join(";") };
        let house = r.house.map_or_else(|| "grave".to_string(), |h| h.0.to_string());
        let town = r.town.map_or_else(|| "-".to_string(), |t| format!("{}:{}", t.row(), t.col()));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.id.0,
            r.gender.as_str(),
            r.age_steps,
            r.alive,
            r.status.as_str(),
            opt_id(r.partner),
            opt_id(r.father),
            opt_id(r.mother),
            children,
            house,
            town
        );
    }
    out
}

pub fn export_population(store: &PopulationStore, space: &Space, path: &Path) -> Result<()> {
    std::fs::write(path, records_to_text(&records(store, space))).map_err(|e| SimError::io(path, e))
}

fn parse_line(line: &str, origin: &str, n: usize) -> Result<PersonRecord> {
    let err = |m: String| SimError::parse(origin, n, m);
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 11 {
        return Err(err(format!("expected 11 fields, found {}", fields.len())));
    }
    let id_of = |s: &str| -> Result<PersonId> {
        s.parse::<u32>().map(PersonId).map_err(|_| err(format!("bad person id `{s}`")))
    };
    let opt = |s: &str| -> Result<Option<PersonId>> { if s == "-" { Ok(None) } else { id_of(s).map(Some) } };
    let gender = match fields[1] {
        "male" => Gender::Male,
        "female" => Gender::Female,
        g => return Err(err(format!("bad gender `{g}`"))),
    };
    let status = match fields[4] {
        "single" => MaritalStatus::Single,
        "married" => MaritalStatus::Married,
        "divorced" => MaritalStatus::Divorced,
        "widowed" => MaritalStatus::Widowed,
        s => return Err(err(format!("bad status `{s}`"))),
    };
    let children = if fields[8] == "-" {
        Vec::new()
    } else {
        fields[8].split(';').map(id_of).collect::<Result<_>>()?
    };
    let house = match fields[9] {
        "grave" => None,
        h => Some(HouseId(h.parse().map_err(|_| err(format!("bad house `{h}`")))?)),
    };
    let town = match fields[10] {
        "-" => None,
        t => {
            let parsed = t
                .split_once(':')
                .and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)))
                .and_then(|(r, c)| TownId::new(r, c));
            Some(parsed.ok_or_else(|| err(format!("bad town `{t}`")))?)
        }
    };
    Ok(PersonRecord {
        id: id_of(fields[0])?,
        gender,
        age_steps: fields[2].parse().map_err(|_| err(format!("bad age `{}`", fields[2])))?,
        alive: fields[3].parse().map_err(|_| err(format!("bad alive flag `{}`", fields[3])))?,
        status,
        partner: opt(fields[5])?,
        father: opt(fields[6])?,
        mother: opt(fields[7])?,
        children,
        house,
        town,
    })
}

pub fn parse_population(text: &str, origin: &str) -> Result<Vec<PersonRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| parse_line(l.trim(), origin, i + 1))
        .collect()
}

pub fn import_population(path: &Path) -> Result<Vec<PersonRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_population(&text, &path.display().to_string())
}

/// Structural checks on an imported dump: residence, partnership symmetry,
/// kinship links, and age of the married.
pub fn check_records(records: &[PersonRecord], adult_steps: u64) -> InvariantReport {
    let mut r = InvariantReport::default();
    let by_id: HashMap<PersonId, &PersonRecord> = records.iter().map(|p| (p.id, p)).collect();
    for p in records {
        let id = p.id;
        if p.alive != p.house.is_some() || p.house.is_some() != p.town.is_some() {
            r.violations.push(format!("{id}: alive={} with house {:?}", p.alive, p.house));
        }
        if (p.status == MaritalStatus::Married) != p.partner.is_some() {
            r.violations.push(format!("{id}: status {} with partner {:?}", p.status.as_str(), p.partner));
        }
        if let Some(q) = p.partner {
            match by_id.get(&q) {
                Some(q) if q.partner == Some(id) && q.gender != p.gender => {}
                _ => r.violations.push(format!("{id}: partnership with {q} is not mutual")),
            }
            if p.age_steps < adult_steps {
                r.violations.push(format!("{id}: married under 18"));
            }
        }
        for parent in [p.father, p.mother].into_iter().flatten() {
            if !by_id.get(&parent).is_some_and(|q| q.children.contains(&id)) {
                r.violations.push(format!("{id}: parent {parent} does not list them"));
            }
        }
        for c in &p.children {
            if !by_id.get(c).is_some_and(|k| k.father == Some(id) || k.mother == Some(id)) {
                r.violations.push(format!("{id}: child {c} does not point back"));
            }
        }
    }
    r
}
