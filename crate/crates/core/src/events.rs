//! Per-step population transitions.
//!
//! Every event walks its subject population in shuffled order and applies a
//! per-step Bernoulli trial derived from a yearly probability. The predicates
//! selecting each subject population are also exposed as [`FeatureExpr`]s
//! (see [`subjects`]) so the fast paths here can be cross-checked against the
//! feature algebra.

use crate::error::Result;
use crate::features::StepSnapshot;
use crate::params::{DataTables, ModelParameters};
use crate::population::{Dissolution, Gender, MaritalStatus, PersonId, PopulationStore, ADULT_AGE_YEARS};
use crate::space::{manhattan_distance, HouseId, Space};
use crate::stochastics::{instantaneous_probability, weighted_index, ClockSpec, SimRng};

/// Upper age bound (exclusive, years) for giving birth.
pub const MAX_REPRODUCTIVE_AGE: u64 = 45;

/// What happened during one step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepEventLog {
    pub births: Vec<PersonId>,
    pub deaths: Vec<PersonId>,
    /// Survivors whose partner died this step.
    pub widowed: Vec<PersonId>,
    /// `(husband, wife)`
    pub marriages: Vec<(PersonId, PersonId)>,
    /// `(husband, wife)`
    pub divorces: Vec<(PersonId, PersonId)>,
    /// Orphans who came of age and moved out.
    pub orphan_relocations: Vec<PersonId>,
    /// Divorced men who moved out.
    pub divorce_relocations: Vec<PersonId>,
}

impl StepEventLog {
    pub fn birth_count(&self) -> usize {
        self.births.len()
    }

    pub fn death_count(&self) -> usize {
        self.deaths.len()
    }

    pub fn marriage_count(&self) -> usize {
        self.marriages.len()
    }

    pub fn divorce_count(&self) -> usize {
        self.divorces.len()
    }

    pub fn orphan_relocation_count(&self) -> usize {
        self.orphan_relocations.len()
    }

    pub fn divorce_relocation_count(&self) -> usize {
        self.divorce_relocations.len()
    }
}

/// Everything an event reads besides the mutable state.
#[derive(Clone, Copy)]
pub struct EventContext<'a> {
    pub params: &'a ModelParameters,
    pub tables: &'a DataTables,
    pub prev: &'a StepSnapshot,
    /// Calendar year the step belongs to.
    pub year: i32,
}

/// `1 / (d - 4)` when the man is at least five years older, `-1 / (d + 1)`
/// when he is at least two years younger, otherwise one. `d` is his age minus
/// hers, in years.
pub fn age_factor(age_difference_years: f64) -> f64 {
    let d = age_difference_years;
    if d >= 5.0 {
        1.0 / (d - 5.0 + 1.0)
    } else if d <= -2.0 {
        -1.0 / (d + 2.0 - 1.0)
    } else {
        1.0
    }
}

pub fn geo_factor(distance: u32) -> f64 {
    libm::exp(-4.0 * distance as f64)
}

pub fn children_factor(his_children: usize, her_children: usize) -> f64 {
    let (m, f) = (his_children as f64, her_children as f64);
    libm::exp(m * f - m - f)
}

/// Compatibility of a prospective couple: distance, children, and age
/// factors multiplied.
pub fn marriage_weight(store: &PopulationStore, space: &Space, man: PersonId, woman: PersonId) -> f64 {
    let (m, f) = (store.person(man), store.person(woman));
    let town = |p: &crate::population::Person| space.town_of(p.house().expect("living persons are housed"));
    let distance = manhattan_distance(town(m), town(f));
    let diff = (m.age_steps() as i64 - f.age_steps() as i64) as f64 / store.clock().steps_per_year() as f64;
    geo_factor(distance) * children_factor(m.children().len(), f.children().len()) * age_factor(diff)
}

pub fn divorce_probability_yearly(
    params: &ModelParameters,
    tables: &DataTables,
    age_steps: u64,
    clock: ClockSpec,
) -> f64 {
    params.basic_divorce_rate * tables.divorce_modifier(age_steps, clock.steps_per_year())
}

pub fn marriage_probability_yearly(
    params: &ModelParameters,
    tables: &DataTables,
    age_steps: u64,
    clock: ClockSpec,
) -> f64 {
    params.basic_male_marriage_rate * tables.male_marriage_modifier(age_steps, clock.steps_per_year())
}

fn per_step(p_yearly: f64, clock: ClockSpec) -> f64 {
    instantaneous_probability(p_yearly.clamp(0.0, 1.0), clock).expect("clamped into [0, 1]")
}

fn adult_steps(clock: ClockSpec) -> u64 {
    clock.steps_in_years(ADULT_AGE_YEARS)
}

/// Ages everyone alive by one step. Orphans turning 18 this step who have
/// an alive older sibling move alone into an empty house in their town.
pub fn ageing_step(store: &mut PopulationStore, space: &mut Space, rng: &mut SimRng, log: &mut StepEventLog) -> Result<()> {
    store.advance_step();
    let adult = adult_steps(store.clock());
    let coming_of_age: Vec<PersonId> = store
        .alive()
        .filter(|p| p.age_steps() == adult)
        .map(|p| p.id())
        .filter(|&id| store.is_orphan(id) && store.has_alive_older_sibling(id))
        .collect();
    for id in coming_of_age {
        let house = store.person(id).house().expect("alive");
        let town = space.town_of(house);
        let target = space.find_or_create_empty_house(town, rng)?;
        space.move_person(store, id, target)?;
        log.orphan_relocations.push(id);
    }
    Ok(())
}

pub fn deaths_step(
    store: &mut PopulationStore,
    space: &mut Space,
    ctx: EventContext<'_>,
    rng: &mut SimRng,
    log: &mut StepEventLog,
) -> Result<()> {
    let clock = store.clock();
    let mut subjects: Vec<PersonId> = store.alive().map(|p| p.id()).collect();
    rng.shuffle(&mut subjects);
    for id in subjects {
        let p = store.person(id);
        let yearly = ctx.params.death_probability_yearly(p.gender(), clock.years(p.age_steps()));
        if rng.bernoulli(per_step(yearly, clock)) {
            if let Some(survivor) = store.kill(space, id)? {
                log.widowed.push(survivor);
            }
            log.deaths.push(id);
        }
    }
    Ok(())
}

/// Married, alive, under 45, and either childless or with the youngest child
/// born more than a year ago.
pub fn is_reproducible(store: &PopulationStore, id: PersonId) -> bool {
    let p = store.person(id);
    let n = store.clock().steps_per_year() as i64;
    p.is_alive()
        && p.gender() == Gender::Female
        && p.is_married()
        && p.age_steps() < store.clock().steps_in_years(MAX_REPRODUCTIVE_AGE)
        && store
            .youngest_child(id)
            .is_none_or(|c| store.current_step() - store.person(c).birth_step() > n)
}

pub fn births_step(
    store: &mut PopulationStore,
    space: &mut Space,
    ctx: EventContext<'_>,
    rng: &mut SimRng,
    log: &mut StepEventLog,
) -> Result<()> {
    let clock = store.clock();
    let mut subjects: Vec<PersonId> = store.ids().filter(|&id| is_reproducible(store, id)).collect();
    rng.shuffle(&mut subjects);
    for mother in subjects {
        let m = store.person(mother);
        let whole_years = (m.age_steps() / clock.steps_per_year() as u64) as u32;
        let rate = ctx.tables.fertility.rate(whole_years, ctx.year);
        if !rng.bernoulli(per_step(rate, clock)) {
            continue;
        }
        let father = m.partner().expect("reproducible women are married");
        let house = m.house().expect("alive");
        let gender = if rng.coin() { Gender::Male } else { Gender::Female };
        let baby = store.spawn(space, gender, 0, Some(father), Some(mother), house)?;
        log.births.push(baby);
    }
    Ok(())
}

fn was_married(prev: &StepSnapshot, id: PersonId) -> bool {
    prev.marital_status(id) == Some(MaritalStatus::Married)
}

pub fn divorces_step(
    store: &mut PopulationStore,
    space: &mut Space,
    ctx: EventContext<'_>,
    rng: &mut SimRng,
    log: &mut StepEventLog,
) -> Result<()> {
    let clock = store.clock();
    let mut subjects: Vec<PersonId> = store
        .alive()
        .filter(|p| p.is_male() && p.is_married() && was_married(ctx.prev, p.id()))
        .map(|p| p.id())
        .collect();
    rng.shuffle(&mut subjects);
    for man in subjects {
        let yearly = divorce_probability_yearly(ctx.params, ctx.tables, store.person(man).age_steps(), clock);
        if !rng.bernoulli(per_step(yearly, clock)) {
            continue;
        }
        let wife = store.unwed(man, Dissolution::Divorce)?;
        let town = space.town_of(store.person(man).house().expect("alive"));
        let target = space.find_or_create_empty_house(town, rng)?;
        space.move_person(store, man, target)?;
        log.divorces.push((man, wife));
        log.divorce_relocations.push(man);
    }
    Ok(())
}

/// Unmarried adults whose status did not just change: excludes persons who
/// were married at the previous boundary and persons who turned 18 since.
fn marriage_eligible(store: &PopulationStore, prev: &StepSnapshot, id: PersonId, gender: Gender) -> bool {
    let p = store.person(id);
    let adult = adult_steps(store.clock());
    let just_adult = prev.age_steps(id).is_none_or(|a| a < adult);
    p.is_alive()
        && p.gender() == gender
        && !p.is_married()
        && p.age_steps() >= adult
        && !was_married(prev, id)
        && (gender == Gender::Female || !just_adult)
}

pub fn marriages_step(
    store: &mut PopulationStore,
    space: &mut Space,
    ctx: EventContext<'_>,
    rng: &mut SimRng,
    log: &mut StepEventLog,
) -> Result<()> {
    let clock = store.clock();
    let mut subjects: Vec<PersonId> =
        store.ids().filter(|&id| marriage_eligible(store, ctx.prev, id, Gender::Male)).collect();
    rng.shuffle(&mut subjects);
    let mut pool: Option<Vec<PersonId>> = None;
    let mut weights = Vec::new();
    for man in subjects {
        let yearly = marriage_probability_yearly(ctx.params, ctx.tables, store.person(man).age_steps(), clock);
        if !rng.bernoulli(per_step(yearly, clock)) {
            continue;
        }
        let pool = pool.get_or_insert_with(|| {
            store.ids().filter(|&id| marriage_eligible(store, ctx.prev, id, Gender::Female)).collect()
        });
        if pool.is_empty() {
            continue;
        }
        let k = ctx.params.max_num_marr_cand.max(pool.len().div_ceil(10)).min(pool.len());
        rng.partial_shuffle(pool, k);
        weights.clear();
        weights.extend(pool[..k].iter().map(|&w| marriage_weight(store, space, man, w)));
        let Ok(pick) = weighted_index(rng, &weights) else {
            continue;
        };
        let wife = pool.swap_remove(pick);
        store.wed(man, wife)?;
        merge_households(store, space, man, wife)?;
        log.marriages.push((man, wife));
    }
    Ok(())
}

/// Moves the newlyweds under one roof. The wife's household joins the
/// husband's unless his house has strictly fewer occupants, in which case his
/// household joins hers. The moving spouse takes along their own children
/// living there and any minors left without a parent in that house.
pub fn merge_households(store: &mut PopulationStore, space: &mut Space, husband: PersonId, wife: PersonId) -> Result<()> {
    let his = store.person(husband).house().expect("alive");
    let hers = store.person(wife).house().expect("alive");
    if his == hers {
        return Ok(());
    }
    let (mover, from, to) = if space.house(his).occupants().len() >= space.house(hers).occupants().len() {
        (wife, hers, his)
    } else {
        (husband, his, hers)
    };
    let movers = household_followers(store, space, mover, from);
    space.move_person(store, mover, to)?;
    for q in movers {
        space.move_person(store, q, to)?;
    }
    Ok(())
}

fn household_followers(store: &PopulationStore, space: &Space, mover: PersonId, house: HouseId) -> Vec<PersonId> {
    let occupants = space.house(house).occupants();
    let adult = adult_steps(store.clock());
    occupants
        .iter()
        .copied()
        .filter(|&q| q != mover)
        .filter(|&q| {
            let p = store.person(q);
            if p.father() == Some(mover) || p.mother() == Some(mover) {
                return true;
            }
            let parent_stays = [p.father(), p.mother()]
                .into_iter()
                .flatten()
                .any(|par| par != mover && occupants.contains(&par));
            p.age_steps() < adult && !parent_stays
        })
        .collect()
}

/// The subject populations of each event as feature expressions, evaluated
/// at the moment the event starts.
pub mod subjects {
    use crate::features::f::*;
    use crate::features::{just, Cmp, Feature, FeatureExpr};

    pub fn reproducible_females() -> FeatureExpr {
        let youngest_over_one: FeatureExpr = Feature::YoungestChildOlderThan(1.0).into();
        female() & alive() & married() & age(Cmp::Lt, 45.0) & (youngest_over_one | !has_children())
    }

    pub fn divorce_candidates() -> FeatureExpr {
        (male() & alive() & married()) - just(married())
    }

    pub fn marriage_eligible_males() -> FeatureExpr {
        (male() & alive() & unmarried() & age(Cmp::Ge, 18.0)) - just(unmarried()) - just(age(Cmp::Ge, 18.0))
    }

    pub fn marriage_eligible_females() -> FeatureExpr {
        (female() & alive() & unmarried() & age(Cmp::Ge, 18.0)) - just(unmarried())
    }

    pub fn coming_of_age_orphans() -> FeatureExpr {
        let older: FeatureExpr = Feature::HasAliveOlderSibling.into();
        alive() & just(age(Cmp::Ge, 18.0)) & orphan() & older
    }
}
