//! Towns on a 12 x 8 grid, the density map that weights them, and the
//! growing set of houses.

use std::fmt;
use std::path::Path;

use crate::error::{Result, SimError};
use crate::population::{PersonId, PopulationStore};
use crate::stochastics::SimRng;

pub const GRID_ROWS: usize = 12;
pub const GRID_COLS: usize = 8;
pub const GRID_CELLS: usize = GRID_ROWS * GRID_COLS;

/// Default side length of the town-internal house grid.
pub const DEFAULT_HOUSE_GRID: u32 = 25;

#[rustfmt::skip]
const DEFAULT_DENSITY: [[f64; GRID_COLS]; GRID_ROWS] = [
    [0.0, 0.1, 0.2, 0.1, 0.0, 0.0, 0.0, 0.0],
    [0.1, 0.1, 0.2, 0.2, 0.3, 0.0, 0.0, 0.0],
    [0.0, 0.2, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.2, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0],
    [0.4, 0.0, 0.2, 0.2, 0.4, 0.0, 0.0, 0.0],
    [0.6, 0.0, 0.0, 0.3, 0.8, 0.2, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.6, 0.8, 0.4, 0.0, 0.0],
    [0.0, 0.0, 0.2, 1.0, 0.8, 0.6, 0.1, 0.0],
    [0.0, 0.0, 0.1, 0.2, 1.0, 0.6, 0.3, 0.4],
    [0.0, 0.0, 0.5, 0.7, 0.5, 1.0, 1.0, 0.0],
    [0.0, 0.0, 0.2, 0.4, 0.6, 1.0, 1.0, 0.0],
    [0.0, 0.2, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0],
];

/// A grid cell. `row` runs 1..=12 north to south, `col` 1..=8 west to east.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TownId(u8);

impl TownId {
    pub fn new(row: u8, col: u8) -> Option<Self> {
        if (1..=GRID_ROWS as u8).contains(&row) && (1..=GRID_COLS as u8).contains(&col) {
            Some(Self((row - 1) * GRID_COLS as u8 + (col - 1)))
        } else {
            None
        }
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < GRID_CELLS);
        Self(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn row(self) -> u8 {
        self.0 / GRID_COLS as u8 + 1
    }

    pub fn col(self) -> u8 {
        self.0 % GRID_COLS as u8 + 1
    }

    pub fn all() -> impl Iterator<Item = TownId> {
        (0..GRID_CELLS).map(TownId::from_index)
    }
}

impl fmt::Display for TownId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row(), self.col())
    }
}

pub fn manhattan_distance(a: TownId, b: TownId) -> u32 {
    (a.row().abs_diff(b.row()) + a.col().abs_diff(b.col())) as u32
}

/// Relative population density per grid cell; nonzero cells are the
/// inhabitable towns.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    cells: [[f64; GRID_COLS]; GRID_ROWS],
}

impl Default for DensityMap {
    fn default() -> Self {
        Self { cells: DEFAULT_DENSITY }
    }
}

impl DensityMap {
    pub fn from_cells(cells: [[f64; GRID_COLS]; GRID_ROWS]) -> Result<Self> {
        for &v in cells.iter().flatten() {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::Config(format!("density entry {v} outside [0, 1]")));
            }
        }
        let map = Self { cells };
        if map.inhabited_count() == 0 {
            return Err(SimError::EmptyDensityMap);
        }
        Ok(map)
    }

    pub fn get(&self, town: TownId) -> f64 {
        self.cells[town.row() as usize - 1][town.col() as usize - 1]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }

    pub fn inhabited_count(&self) -> usize {
        self.cells.iter().flatten().filter(|&&v| v > 0.0).count()
    }

    pub fn inhabited_towns(&self) -> impl Iterator<Item = TownId> + '_ {
        TownId::all().filter(|&t| self.get(t) > 0.0)
    }

    /// Parses 12 lines of 8 whitespace-separated decimals. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cells = [[0.0; GRID_COLS]; GRID_ROWS];
        let mut row = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if row == GRID_ROWS {
                return Err(SimError::parse(origin, lineno + 1, "more than 12 density rows"));
            }
            let values: Vec<&str> = line.split_whitespace().collect();
            if values.len() != GRID_COLS {
                return Err(SimError::parse(
                    origin,
                    lineno + 1,
                    format!("expected 8 values, found {}", values.len()),
                ));
            }
            for (col, v) in values.iter().enumerate() {
                cells[row][col] = v
                    .parse()
                    .map_err(|_| SimError::parse(origin, lineno + 1, format!("bad decimal `{v}`")))?;
            }
            row += 1;
        }
        if row != GRID_ROWS {
            return Err(SimError::parse(origin, 0, format!("expected 12 density rows, found {row}")));
        }
        Self::from_cells(cells)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.cells {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.1}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HouseId(pub u32);

impl HouseId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for HouseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Where a person lives. Dead persons are in the grave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Residence {
    House(HouseId),
    Grave,
}

impl Residence {
    pub fn house(self) -> Option<HouseId> {
        match self {
            Residence::House(h) => Some(h),
            Residence::Grave => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct House {
    pub id: HouseId,
    pub town: TownId,
    pub local_x: u32,
    pub local_y: u32,
    occupants: Vec<PersonId>,
}

impl House {
    pub fn occupants(&self) -> &[PersonId] {
        &self.occupants
    }

    pub fn is_empty(&self) -> bool {
        self.occupants.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Town {
    pub id: TownId,
    pub density: f64,
    houses: Vec<HouseId>,
    empty: Vec<HouseId>,
}

impl Town {
    pub fn houses(&self) -> &[HouseId] {
        &self.houses
    }

    pub fn empty_houses(&self) -> &[HouseId] {
        &self.empty
    }

    pub fn is_inhabitable(&self) -> bool {
        self.density > 0.0
    }
}

/// Towns plus houses. Houses are only ever added.
#[derive(Debug, Clone)]
pub struct Space {
    density: DensityMap,
    towns: Vec<Town>,
    houses: Vec<House>,
    // position of each house inside its town's empty list
    empty_slot: Vec<Option<usize>>,
    cumulative: Vec<f64>,
    house_grid: u32,
}

impl Space {
    pub fn new(density: DensityMap, house_grid: u32) -> Self {
        let towns = TownId::all()
            .map(|id| Town { id, density: density.get(id), houses: Vec::new(), empty: Vec::new() })
            .collect();
        let mut acc = 0.0;
        let cumulative = TownId::all()
            .map(|t| {
                acc += density.get(t);
                acc
            })
            .collect();
        Self {
            density,
            towns,
            houses: Vec::new(),
            empty_slot: Vec::new(),
            cumulative,
            house_grid: house_grid.max(1),
        }
    }

    pub fn density(&self) -> &DensityMap {
        &self.density
    }

    pub fn town(&self, id: TownId) -> &Town {
        &self.towns[id.index()]
    }

    pub fn towns(&self) -> &[Town] {
        &self.towns
    }

    pub fn house(&self, id: HouseId) -> &House {
        &self.houses[id.index()]
    }

    pub fn get_house(&self, id: HouseId) -> Option<&House> {
        self.houses.get(id.index())
    }

    pub fn houses(&self) -> &[House] {
        &self.houses
    }

    pub fn house_count(&self) -> usize {
        self.houses.len()
    }

    pub fn occupied_house_count(&self) -> usize {
        self.houses.iter().filter(|h| !h.is_empty()).count()
    }

    pub fn house_grid(&self) -> u32 {
        self.house_grid
    }

    pub fn town_of(&self, house: HouseId) -> TownId {
        self.houses[house.index()].town
    }

    /// Town drawn with probability proportional to its density.
    pub fn sample_town_weighted(&self, rng: &mut SimRng) -> Result<TownId> {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        if total <= 0.0 {
            return Err(SimError::EmptyDensityMap);
        }
        let target = rng.uniform() * total;
        let idx = self.cumulative.partition_point(|&c| c <= target);
        if idx < GRID_CELLS {
            return Ok(TownId::from_index(idx));
        }
        // target landed on the rounding gap above the last cell
        let last = (0..GRID_CELLS).rev().find(|&i| self.density.get(TownId::from_index(i)) > 0.0);
        Ok(TownId::from_index(last.expect("nonzero total implies an inhabited cell")))
    }

    /// Adds a new, empty house at a uniform position inside `town`.
    pub fn create_house(&mut self, town: TownId, rng: &mut SimRng) -> Result<HouseId> {
        let t = &self.towns[town.index()];
        if !t.is_inhabitable() {
            return Err(SimError::UninhabitableTown { row: town.row(), col: town.col() });
        }
        let id = HouseId(self.houses.len() as u32);
        let local_x = rng.below(self.house_grid as usize) as u32 + 1;
        let local_y = rng.below(self.house_grid as usize) as u32 + 1;
        self.houses.push(House { id, town, local_x, local_y, occupants: Vec::new() });
        self.empty_slot.push(None);
        let t = &mut self.towns[town.index()];
        t.houses.push(id);
        self.empty_slot[id.index()] = Some(t.empty.len());
        t.empty.push(id);
        Ok(id)
    }

    /// An empty house in `town`, chosen uniformly among the existing empty
    /// ones, or a newly created one when there are none.
    pub fn find_or_create_empty_house(&mut self, town: TownId, rng: &mut SimRng) -> Result<HouseId> {
        let t = &self.towns[town.index()];
        if !t.is_inhabitable() {
            return Err(SimError::UninhabitableTown { row: town.row(), col: town.col() });
        }
        if t.empty.is_empty() {
            self.create_house(town, rng)
        } else {
            Ok(t.empty[rng.below(t.empty.len())])
        }
    }

    /// Relocates a living person to `house`.
    pub fn move_person(&mut self, store: &mut PopulationStore, p: PersonId, house: HouseId) -> Result<()> {
        if house.index() >= self.houses.len() {
            return Err(SimError::UnknownHouse(house.0));
        }
        let person = store.get(p).ok_or(SimError::UnknownPerson(p))?;
        if !person.is_alive() {
            return Err(SimError::Dead(p));
        }
        match person.residence() {
            Residence::House(old) if old == house => return Ok(()),
            Residence::House(old) => self.remove_occupant(old, p),
            Residence::Grave => {}
        }
        self.add_occupant(house, p);
        store.set_residence(p, Residence::House(house));
        Ok(())
    }

    pub(crate) fn add_occupant(&mut self, house: HouseId, p: PersonId) {
        let h = &mut self.houses[house.index()];
        let was_empty = h.occupants.is_empty();
        h.occupants.push(p);
        if was_empty {
            self.unmark_empty(house);
        }
    }

    pub(crate) fn remove_occupant(&mut self, house: HouseId, p: PersonId) {
        let h = &mut self.houses[house.index()];
        if let Some(pos) = h.occupants.iter().position(|&q| q == p) {
            h.occupants.remove(pos);
            if h.occupants.is_empty() {
                self.mark_empty(house);
            }
        }
    }

    fn mark_empty(&mut self, house: HouseId) {
        let town = self.houses[house.index()].town;
        let t = &mut self.towns[town.index()];
        self.empty_slot[house.index()] = Some(t.empty.len());
        t.empty.push(house);
    }

    fn unmark_empty(&mut self, house: HouseId) {
        let Some(slot) = self.empty_slot[house.index()].take() else {
            return;
        };
        let town = self.houses[house.index()].town;
        let t = &mut self.towns[town.index()];
        t.empty.swap_remove(slot);
        if let Some(&moved) = t.empty.get(slot) {
            self.empty_slot[moved.index()] = Some(slot);
        }
    }
}
