//! Agent storage and the kinship graph.
//!
//! Persons are never removed: the dead stay in the store with their
//! residence set to [`Residence::Grave`] so that kinship links of the living
//! keep resolving. Ids are dense, assigned in increasing order, and double as
//! indices into the store.

use std::fmt;

use crate::error::{Result, SimError};
use crate::space::{HouseId, Residence, Space};
use crate::stochastics::ClockSpec;

pub const ADULT_AGE_YEARS: u64 = 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PersonId(pub u32);

impl PersonId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn opposite(self) -> Self {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaritalStatus {
    Single,
    Married,
    Divorced,
    Widowed,
}

impl MaritalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MaritalStatus::Single => "single",
            MaritalStatus::Married => "married",
            MaritalStatus::Divorced => "divorced",
            MaritalStatus::Widowed => "widowed",
        }
    }
}

/// Why a marriage ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dissolution {
    Divorce,
    /// The partner of the person passed to [`PopulationStore::unwed`] died.
    PartnerDeath,
}

#[derive(Debug, Clone)]
pub struct Person {
    id: PersonId,
    gender: Gender,
    age_steps: u64,
    birth_step: i64,
    alive: bool,
    marital: MaritalStatus,
    partner: Option<PersonId>,
    father: Option<PersonId>,
    mother: Option<PersonId>,
    children: Vec<PersonId>,
    residence: Residence,
}

impl Person {
    pub fn id(&self) -> PersonId {
        self.id
    }

    pub fn gender(&self) -> Gender {
        self.gender
    }

    pub fn is_male(&self) -> bool {
        self.gender == Gender::Male
    }

    /// Age as a whole number of simulation steps.
    pub fn age_steps(&self) -> u64 {
        self.age_steps
    }

    /// Step index at which this person was born (negative for the initial
    /// population).
    pub fn birth_step(&self) -> i64 {
        self.birth_step
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn marital_status(&self) -> MaritalStatus {
        self.marital
    }

    pub fn is_married(&self) -> bool {
        self.marital == MaritalStatus::Married
    }

    pub fn partner(&self) -> Option<PersonId> {
        self.partner
    }

    pub fn father(&self) -> Option<PersonId> {
        self.father
    }

    pub fn mother(&self) -> Option<PersonId> {
        self.mother
    }

    /// Children in birth order.
    pub fn children(&self) -> &[PersonId] {
        &self.children
    }

    pub fn residence(&self) -> Residence {
        self.residence
    }

    pub fn house(&self) -> Option<HouseId> {
        self.residence.house()
    }
}

#[derive(Debug, Clone)]
pub struct PopulationStore {
    persons: Vec<Person>,
    clock: ClockSpec,
    step: i64,
}

impl PopulationStore {
    pub fn new(clock: ClockSpec) -> Self {
        Self { persons: Vec::new(), clock, step: 0 }
    }

    pub fn clock(&self) -> ClockSpec {
        self.clock
    }

    /// Number of steps simulated so far.
    pub fn current_step(&self) -> i64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    pub fn get(&self, id: PersonId) -> Option<&Person> {
        self.persons.get(id.index())
    }

    /// Panics on an unknown id.
    pub fn person(&self, id: PersonId) -> &Person {
        &self.persons[id.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Person> {
        self.persons.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = PersonId> {
        (0..self.persons.len() as u32).map(PersonId)
    }

    pub fn alive(&self) -> impl Iterator<Item = &Person> {
        self.persons.iter().filter(|p| p.alive)
    }

    pub fn alive_count(&self) -> usize {
        self.alive().count()
    }

    pub fn age_years(&self, id: PersonId) -> f64 {
        self.clock.years(self.person(id).age_steps)
    }

    pub fn is_adult(&self, id: PersonId) -> bool {
        self.person(id).age_steps >= self.clock.steps_in_years(ADULT_AGE_YEARS)
    }

    /// Converts an age in years to steps, rejecting ages that are negative or
    /// not a multiple of the step size.
    pub fn steps_from_years(&self, years: f64) -> Result<u64> {
        let steps = years * self.clock.steps_per_year() as f64;
        if !steps.is_finite() || steps < 0.0 || (steps - steps.round()).abs() > 1e-6 {
            return Err(SimError::InvalidAge(steps));
        }
        Ok(steps.round() as u64)
    }

    /// Adds a living, single person to `house`.
    pub fn spawn(
        &mut self,
        space: &mut Space,
        gender: Gender,
        age_steps: u64,
        father: Option<PersonId>,
        mother: Option<PersonId>,
        house: HouseId,
    ) -> Result<PersonId> {
        if space.get_house(house).is_none() {
            return Err(SimError::UnknownHouse(house.0));
        }
        for (parent, gender) in [(father, Gender::Male), (mother, Gender::Female)] {
            if let Some(pid) = parent {
                let p = self.get(pid).ok_or(SimError::UnknownPerson(pid))?;
                if p.gender != gender {
                    return Err(SimError::ParentGender(pid));
                }
            }
        }
        let id = PersonId(self.persons.len() as u32);
        self.persons.push(Person {
            id,
            gender,
            age_steps,
            birth_step: self.step - age_steps as i64,
            alive: true,
            marital: MaritalStatus::Single,
            partner: None,
            father,
            mother,
            children: Vec::new(),
            residence: Residence::House(house),
        });
        for parent in [father, mother].into_iter().flatten() {
            self.persons[parent.index()].children.push(id);
        }
        space.add_occupant(house, id);
        Ok(id)
    }

    pub fn wed(&mut self, a: PersonId, b: PersonId) -> Result<()> {
        let adult = self.clock.steps_in_years(ADULT_AGE_YEARS);
        let pa = self.get(a).ok_or(SimError::UnknownPerson(a))?;
        let pb = self.get(b).ok_or(SimError::UnknownPerson(b))?;
        for p in [pa, pb] {
            if !p.alive {
                return Err(SimError::Dead(p.id));
            }
            if p.is_married() {
                return Err(SimError::AlreadyMarried(p.id));
            }
            if p.age_steps < adult {
                return Err(SimError::Underage(p.id));
            }
        }
        if pa.gender == pb.gender {
            return Err(SimError::SameGender(a, b));
        }
        for (x, y) in [(a, b), (b, a)] {
            let p = &mut self.persons[x.index()];
            p.marital = MaritalStatus::Married;
            p.partner = Some(y);
        }
        Ok(())
    }

    /// Ends the marriage of `a`. On divorce both become divorced; when the
    /// partner died, both records become widowed. Returns the former partner.
    pub fn unwed(&mut self, a: PersonId, reason: Dissolution) -> Result<PersonId> {
        let p = self.get(a).ok_or(SimError::UnknownPerson(a))?;
        let b = match (p.marital, p.partner) {
            (MaritalStatus::Married, Some(b)) => b,
            _ => return Err(SimError::NotMarried(a)),
        };
        let status = match reason {
            Dissolution::Divorce => MaritalStatus::Divorced,
            Dissolution::PartnerDeath => MaritalStatus::Widowed,
        };
        for x in [a, b] {
            let p = &mut self.persons[x.index()];
            p.marital = status;
            p.partner = None;
        }
        Ok(b)
    }

    /// Moves `a` to the grave. A surviving spouse becomes widowed and is
    /// returned.
    pub fn kill(&mut self, space: &mut Space, a: PersonId) -> Result<Option<PersonId>> {
        let p = self.get(a).ok_or(SimError::UnknownPerson(a))?;
        if !p.alive {
            return Err(SimError::Dead(a));
        }
        let survivor = p.partner;
        if let Some(s) = survivor {
            self.unwed(s, Dissolution::PartnerDeath)?;
        }
        let p = &mut self.persons[a.index()];
        let former = p.residence;
        p.alive = false;
        p.residence = Residence::Grave;
        if let Residence::House(h) = former {
            space.remove_occupant(h, a);
        }
        Ok(survivor)
    }

    pub(crate) fn set_residence(&mut self, id: PersonId, residence: Residence) {
        self.persons[id.index()].residence = residence;
    }

    /// Advances the clock by one step and every living person's age with it.
    pub fn advance_step(&mut self) {
        self.step += 1;
        for p in self.persons.iter_mut().filter(|p| p.alive) {
            p.age_steps += 1;
        }
    }

    /// Distinct persons sharing at least one recorded parent with `id`.
    pub fn siblings(&self, id: PersonId) -> Vec<PersonId> {
        let p = self.person(id);
        let mut out: Vec<PersonId> = [p.father, p.mother]
            .into_iter()
            .flatten()
            .flat_map(|parent| self.person(parent).children.iter().copied())
            .filter(|&c| c != id)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Both parents are recorded and both are dead.
    pub fn is_orphan(&self, id: PersonId) -> bool {
        let p = self.person(id);
        match (p.father, p.mother) {
            (Some(f), Some(m)) => !self.person(f).alive && !self.person(m).alive,
            _ => false,
        }
    }

    /// `other` was born before `id`; same-step births are ordered by id.
    pub fn is_older(&self, other: PersonId, id: PersonId) -> bool {
        let (a, b) = (self.person(other), self.person(id));
        (a.birth_step, a.id) < (b.birth_step, b.id)
    }

    pub fn has_alive_older_sibling(&self, id: PersonId) -> bool {
        self.siblings(id)
            .into_iter()
            .any(|s| self.person(s).alive && self.is_older(s, id))
    }

    /// The most recently born child.
    pub fn youngest_child(&self, id: PersonId) -> Option<PersonId> {
        self.person(id)
            .children
            .iter()
            .copied()
            .max_by_key(|&c| (self.person(c).birth_step, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{DensityMap, TownId, DEFAULT_HOUSE_GRID};
    use crate::stochastics::SimRng;

    fn world() -> (PopulationStore, Space, HouseId) {
        let mut space = Space::new(DensityMap::default(), DEFAULT_HOUSE_GRID);
        let mut rng = SimRng::seed_from(1);
        let h = space.create_house(TownId::new(4, 3).unwrap(), &mut rng).unwrap();
        (PopulationStore::new(ClockSpec::monthly()), space, h)
    }

    #[test]
    fn ids_are_dense_and_distinct() {
        let (mut store, mut space, h) = world();
        for i in 0..100_000u32 {
            let g = if i % 2 == 0 { Gender::Male } else { Gender::Female };
            assert_eq!(store.spawn(&mut space, g, 0, None, None, h).unwrap(), PersonId(i));
        }
        assert_eq!(store.len(), 100_000);
        assert_eq!(space.house(h).occupants().len(), 100_000);
    }

    #[test]
    fn spawn_links_parents() {
        let (mut store, mut space, h) = world();
        let f = store.spawn(&mut space, Gender::Male, 30 * 12, None, None, h).unwrap();
        let m = store.spawn(&mut space, Gender::Female, 28 * 12, None, None, h).unwrap();
        let c = store.spawn(&mut space, Gender::Female, 0, Some(f), Some(m), h).unwrap();
        assert_eq!(store.person(f).children(), &[c]);
        assert_eq!(store.person(m).children(), &[c]);
        assert_eq!(store.person(c).father(), Some(f));
        assert!(matches!(store.spawn(&mut space, Gender::Male, 0, Some(m), None, h), Err(SimError::ParentGender(_))));
        assert!(store.spawn(&mut space, Gender::Male, 0, None, None, HouseId(99)).is_err());
        assert!(store.spawn(&mut space, Gender::Male, 0, Some(PersonId(77)), None, h).is_err());
    }

    #[test]
    fn wedding_rules() {
        let (mut store, mut space, h) = world();
        let a = store.spawn(&mut space, Gender::Male, 30 * 12, None, None, h).unwrap();
        let b = store.spawn(&mut space, Gender::Female, 30 * 12, None, None, h).unwrap();
        let c = store.spawn(&mut space, Gender::Male, 30 * 12, None, None, h).unwrap();
        let kid = store.spawn(&mut space, Gender::Female, 18 * 12 - 1, None, None, h).unwrap();
        assert!(matches!(store.wed(a, c), Err(SimError::SameGender(..))));
        assert!(matches!(store.wed(a, kid), Err(SimError::Underage(_))));
        store.wed(a, b).unwrap();
        assert_eq!(store.person(b).partner(), Some(a));
        assert!(matches!(store.wed(c, b), Err(SimError::AlreadyMarried(_))));
        assert_eq!(store.unwed(b, Dissolution::Divorce).unwrap(), a);
        assert_eq!(store.person(a).marital_status(), MaritalStatus::Divorced);
        assert_eq!(store.person(b).partner(), None);
        assert!(matches!(store.unwed(a, Dissolution::Divorce), Err(SimError::NotMarried(_))));
    }

    #[test]
    fn death_widows_the_partner() {
        let (mut store, mut space, h) = world();
        let a = store.spawn(&mut space, Gender::Male, 60 * 12, None, None, h).unwrap();
        let b = store.spawn(&mut space, Gender::Female, 60 * 12, None, None, h).unwrap();
        store.wed(a, b).unwrap();
        assert_eq!(store.kill(&mut space, a).unwrap(), Some(b));
        assert_eq!(store.person(b).marital_status(), MaritalStatus::Widowed);
        assert_eq!(store.person(a).residence(), Residence::Grave);
        assert_eq!(space.house(h).occupants(), &[b]);
        assert!(matches!(store.kill(&mut space, a), Err(SimError::Dead(_))));
        assert!(matches!(store.wed(a, b), Err(SimError::Dead(_))));
        assert_eq!(store.alive_count(), 1);
    }

    #[test]
    fn ageing_skips_the_dead() {
        let (mut store, mut space, h) = world();
        let a = store.spawn(&mut space, Gender::Male, 5, None, None, h).unwrap();
        let b = store.spawn(&mut space, Gender::Male, 5, None, None, h).unwrap();
        store.kill(&mut space, b).unwrap();
        store.advance_step();
        assert_eq!(store.person(a).age_steps(), 6);
        assert_eq!(store.person(b).age_steps(), 5);
        assert_eq!(store.person(a).birth_step(), -5);
        assert_eq!(store.age_years(a), 0.5);
    }

    #[test]
    fn kinship_queries() {
        let (mut store, mut space, h) = world();
        let f = store.spawn(&mut space, Gender::Male, 40 * 12, None, None, h).unwrap();
        let m = store.spawn(&mut space, Gender::Female, 40 * 12, None, None, h).unwrap();
        let old = store.spawn(&mut space, Gender::Male, 10 * 12, Some(f), Some(m), h).unwrap();
        let twin1 = store.spawn(&mut space, Gender::Male, 5 * 12, Some(f), Some(m), h).unwrap();
        let twin2 = store.spawn(&mut space, Gender::Female, 5 * 12, Some(f), Some(m), h).unwrap();
        let half = store.spawn(&mut space, Gender::Female, 2 * 12, Some(f), None, h).unwrap();
        assert_eq!(store.siblings(twin1), vec![old, twin2, half]);
        assert_eq!(store.siblings(half), vec![old, twin1, twin2]);
        assert!(store.is_older(old, twin1));
        assert!(store.is_older(twin1, twin2));
        assert!(!store.is_older(twin2, twin1));
        assert_eq!(store.youngest_child(f), Some(half));
        assert_eq!(store.youngest_child(m), Some(twin2));
        assert!(!store.is_orphan(twin1));
        assert!(!store.is_orphan(half));
        store.kill(&mut space, f).unwrap();
        store.kill(&mut space, m).unwrap();
        assert!(store.is_orphan(twin1));
        assert!(!store.is_orphan(half));
        assert!(store.has_alive_older_sibling(twin2));
        store.kill(&mut space, old).unwrap();
        assert!(!store.has_alive_older_sibling(twin1));
        assert!(store.has_alive_older_sibling(twin2));
    }

    #[test]
    fn steps_from_years_checks_granularity() {
        let store = PopulationStore::new(ClockSpec::monthly());
        assert_eq!(store.steps_from_years(1.5).unwrap(), 18);
        assert!(store.steps_from_years(1.01).is_err());
        assert!(store.steps_from_years(-1.0).is_err());
    }
}
