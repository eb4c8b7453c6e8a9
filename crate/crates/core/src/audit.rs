//! Full-sweep structural checks over a population and its space.

use std::collections::HashSet;
use std::fmt;

use crate::population::{Gender, PopulationStore, ADULT_AGE_YEARS};
use crate::space::{Residence, Space};

/// Violations found by [`check_invariants`]. Empty means the state is sound.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantReport {
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, msg: String) {
        // a broken state tends to fail everywhere; keep the report readable
        if self.violations.len() < 50 {
            self.violations.push(msg);
        }
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("all invariants hold");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn check_invariants(store: &PopulationStore, space: &Space) -> InvariantReport {
    let mut r = InvariantReport::default();
    let adult = store.clock().steps_in_years(ADULT_AGE_YEARS);

    for p in store.iter() {
        let id = p.id();
        match (p.is_alive(), p.residence()) {
            (true, Residence::Grave) => r.push(format!("{id}: alive but homeless")),
            (true, Residence::House(h)) => match space.get_house(h) {
                None => r.push(format!("{id}: lives in unknown house {h}")),
                Some(house) if !house.occupants().contains(&id) => {
                    r.push(format!("{id}: missing from occupants of house {h}"))
                }
                _ => {}
            },
            (false, Residence::House(h)) => r.push(format!("{id}: dead but still in house {h}")),
            (false, Residence::Grave) => {}
        }

        match (p.is_married(), p.partner()) {
            (true, Some(q)) => match store.get(q) {
                None => r.push(format!("{id}: unknown partner {q}")),
                Some(partner) => {
                    if partner.partner() != Some(id) || !partner.is_married() {
                        r.push(format!("{id}: partnership with {q} is not symmetric"));
                    }
                    if partner.gender() == p.gender() {
                        r.push(format!("{id}: same-gender partnership with {q}"));
                    }
                    if !p.is_alive() || !partner.is_alive() {
                        r.push(format!("{id}: marriage with {q} involves a dead person"));
                    }
                }
            },
            (true, None) => r.push(format!("{id}: married without partner")),
            (false, Some(q)) => r.push(format!("{id}: unmarried but linked to partner {q}")),
            (false, None) => {}
        }
        if p.is_married() && p.age_steps() < adult {
            r.push(format!("{id}: married under 18"));
        }

        for (parent, role) in [(p.father(), Gender::Male), (p.mother(), Gender::Female)] {
            let Some(pid) = parent else { continue };
            match store.get(pid) {
                None => r.push(format!("{id}: unknown parent {pid}")),
                Some(parent) => {
                    if parent.gender() != role {
                        r.push(format!("{id}: parent {pid} has the wrong gender"));
                    }
                    if !parent.children().contains(&id) {
                        r.push(format!("{id}: not listed among children of {pid}"));
                    }
                    // ids grow with creation time, so this rules out cycles
                    if pid >= id {
                        r.push(format!("{id}: parent {pid} is not older in id order"));
                    }
                }
            }
        }
        for &c in p.children() {
            match store.get(c) {
                None => r.push(format!("{id}: unknown child {c}")),
                Some(child) if child.father() != Some(id) && child.mother() != Some(id) => {
                    r.push(format!("{id}: child {c} does not point back"))
                }
                _ => {}
            }
        }
    }

    let mut housed = 0usize;
    for house in space.houses() {
        let mut seen = HashSet::new();
        for &o in house.occupants() {
            if !seen.insert(o) {
                r.push(format!("house {}: duplicate occupant {o}", house.id));
            }
            match store.get(o) {
                Some(p) if p.is_alive() && p.house() == Some(house.id) => {}
                Some(_) => r.push(format!("house {}: stale occupant {o}", house.id)),
                None => r.push(format!("house {}: unknown occupant {o}", house.id)),
            }
        }
        housed += house.occupants().len();
        if !space.town(house.town).is_inhabitable() {
            r.push(format!("house {}: in uninhabitable town {}", house.id, house.town));
        }
    }
    let alive = store.alive_count();
    if housed != alive {
        r.push(format!("{housed} occupants but {alive} living persons"));
    }

    for town in space.towns() {
        let mut listed: Vec<_> = town.empty_houses().to_vec();
        listed.sort();
        let mut actual: Vec<_> = town.houses().iter().copied().filter(|&h| space.house(h).is_empty()).collect();
        actual.sort();
        if listed != actual {
            r.push(format!("town {}: empty-house index out of sync", town.id));
        }
    }
    r
}
