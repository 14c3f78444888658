use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Cell;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoxMode {
    /// Immovable obstacle.
    Fixed,
    /// A single box that can be pushed.
    Movable,
    /// Several pushable boxes placed in a row.
    Row,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    EmptyRoom,
    CrossRoom,
    TwoRooms,
    BoxRoom(BoxMode),
    KeyDoor,
}

/// Plain description of a layout, validated by [`GridSpec::try_new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridParts {
    pub width: usize,
    pub height: usize,
    pub variant: Variant,
    /// Interior walls; the border is added automatically.
    pub walls: BTreeSet<Cell>,
    pub door_cell: Option<Cell>,
    pub key_cell: Option<Cell>,
    pub box_cells: Vec<Cell>,
    /// Permanent gaps in interior walls (informational, used by landmarks).
    pub openings: Vec<Cell>,
    pub start: Cell,
}

/// Static layout of a grid world. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    width: usize,
    height: usize,
    variant: Variant,
    walls: BTreeSet<Cell>,
    wall_mask: Vec<bool>,
    door_cell: Option<Cell>,
    key_cell: Option<Cell>,
    box_cells: Vec<Cell>,
    openings: Vec<Cell>,
    start: Cell,
}

impl GridSpec {
    pub fn try_new(parts: GridParts) -> Result<Self> {
        let GridParts {
            width,
            height,
            variant,
            mut walls,
            door_cell,
            key_cell,
            mut box_cells,
            openings,
            start,
        } = parts;
        if width < 3 || height < 3 {
            return Err(Error::InvalidSpec(format!(
                "grid {width}x{height} leaves no interior"
            )));
        }
        for x in 0..width {
            walls.insert(Cell::new(x, 0));
            walls.insert(Cell::new(x, height - 1));
        }
        for y in 0..height {
            walls.insert(Cell::new(0, y));
            walls.insert(Cell::new(width - 1, y));
        }
        let in_bounds = |c: &Cell| c.x < width && c.y < height;
        let objects = door_cell
            .iter()
            .chain(key_cell.iter())
            .chain(box_cells.iter())
            .chain(openings.iter())
            .chain(std::iter::once(&start));
        for c in walls.iter().chain(objects.clone()) {
            if !in_bounds(c) {
                return Err(Error::InvalidSpec(format!("cell {c} outside {width}x{height}")));
            }
        }
        let mut seen = BTreeSet::new();
        for c in door_cell.iter().chain(key_cell.iter()).chain(box_cells.iter()) {
            if walls.contains(c) {
                return Err(Error::InvalidSpec(format!("object at {c} overlaps a wall")));
            }
            if !seen.insert(*c) {
                return Err(Error::InvalidSpec(format!("objects overlap at {c}")));
            }
        }
        if let Some(c) = openings.iter().find(|c| walls.contains(c)) {
            return Err(Error::InvalidSpec(format!("opening {c} is a wall")));
        }
        if walls.contains(&start) || box_cells.contains(&start) || door_cell == Some(start) {
            return Err(Error::InvalidSpec(format!("start {start} is not free")));
        }
        if key_cell == Some(start) {
            return Err(Error::InvalidSpec("start cell holds the key".into()));
        }
        box_cells.sort();
        let mut wall_mask = vec![false; width * height];
        for c in &walls {
            wall_mask[c.y * width + c.x] = true;
        }
        Ok(Self {
            width,
            height,
            variant,
            walls,
            wall_mask,
            door_cell,
            key_cell,
            box_cells,
            openings,
            start,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn walls(&self) -> &BTreeSet<Cell> {
        &self.walls
    }

    pub fn door_cell(&self) -> Option<Cell> {
        self.door_cell
    }

    pub fn key_cell(&self) -> Option<Cell> {
        self.key_cell
    }

    pub fn box_cells(&self) -> &[Cell] {
        &self.box_cells
    }

    pub fn openings(&self) -> &[Cell] {
        &self.openings
    }

    pub fn start(&self) -> Cell {
        self.start
    }

    pub fn boxes_movable(&self) -> bool {
        !matches!(self.variant, Variant::BoxRoom(BoxMode::Fixed))
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    #[inline]
    pub fn is_wall(&self, c: Cell) -> bool {
        self.wall_mask[c.y * self.width + c.x]
    }

    /// Non-wall cells in row-major order (doors, keys and boxes included).
    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|c| !self.is_wall(*c))
            .collect()
    }

    /// Geometric centre of the grid, in cell units.
    pub fn center(&self) -> (f64, f64) {
        ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0)
    }

    /// The designated start state: agent at `start`, objects in place.
    pub fn initial_state(&self) -> EnvState {
        EnvState {
            agent: self.start,
            has_key: false,
            door_open: false,
            boxes: self.box_cells.clone(),
        }
    }

    pub fn state_at(&self, agent: Cell) -> EnvState {
        EnvState {
            agent,
            ..self.initial_state()
        }
    }

    pub fn validate_state(&self, s: &EnvState) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidState(m));
        if !self.in_bounds(s.agent) || self.is_wall(s.agent) {
            return bad(format!("agent at {} is not on a free cell", s.agent));
        }
        if self.door_cell == Some(s.agent) && !s.door_open {
            return bad("agent inside a closed door".into());
        }
        if s.boxes.contains(&s.agent) {
            return bad("agent inside a box".into());
        }
        if s.boxes.len() != self.box_cells.len() {
            return bad(format!(
                "{} boxes, layout has {}",
                s.boxes.len(),
                self.box_cells.len()
            ));
        }
        if s.boxes.windows(2).any(|w| w[0] >= w[1]) {
            return bad("boxes must be sorted and distinct".into());
        }
        for b in &s.boxes {
            if !self.in_bounds(*b) || self.is_wall(*b) || self.door_cell == Some(*b) {
                return bad(format!("box at {b} is not on floor"));
            }
        }
        if !self.boxes_movable() && s.boxes != self.box_cells {
            return bad("fixed boxes moved".into());
        }
        if self.key_cell.is_none() && s.has_key {
            return bad("holding a key in a layout without one".into());
        }
        if self.door_cell.is_none() && s.door_open {
            return bad("open door in a layout without one".into());
        }
        if s.door_open && !s.has_key {
            return bad("door open without the key".into());
        }
        if self.key_cell == Some(s.agent) && !s.has_key {
            return bad("agent on the key without holding it".into());
        }
        if let Some(k) = self.key_cell {
            if !s.has_key && s.boxes.contains(&k) {
                return bad("box on top of the key".into());
            }
        }
        Ok(())
    }
}

/// Dynamic part of a grid world. Boxes are kept sorted so that equal
/// configurations compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EnvState {
    pub agent: Cell,
    pub has_key: bool,
    pub door_open: bool,
    pub boxes: Vec<Cell>,
}

impl EnvState {
    /// Short label of everything except the agent position.
    pub fn inventory_label(&self) -> String {
        let mut label = format!("key={};door={}", self.has_key as u8, self.door_open as u8);
        if !self.boxes.is_empty() {
            let cells: Vec<String> = self.boxes.iter().map(|b| format!("{}.{}", b.x, b.y)).collect();
            label.push_str(";boxes=");
            label.push_str(&cells.join("|"));
        }
        label
    }
}

/// Builders for the standard layouts.
pub mod layouts {
    use super::*;

    fn parts(width: usize, height: usize, variant: Variant) -> GridParts {
        GridParts {
            width,
            height,
            variant,
            walls: BTreeSet::new(),
            door_cell: None,
            key_cell: None,
            box_cells: Vec::new(),
            openings: Vec::new(),
            start: Cell::new(width / 2, height / 2),
        }
    }

    pub fn empty_room(width: usize, height: usize) -> Result<GridSpec> {
        GridSpec::try_new(parts(width, height, Variant::EmptyRoom))
    }

    /// Plus-shaped room: the four interior corners are filled with walls,
    /// leaving arms roughly a third of the interior wide.
    pub fn cross_room(width: usize, height: usize) -> Result<GridSpec> {
        let mut p = parts(width, height, Variant::CrossRoom);
        let (iw, ih) = (width.saturating_sub(2), height.saturating_sub(2));
        let arm_w = arm_width(iw);
        let arm_h = arm_width(ih);
        let cx = (iw - arm_w) / 2;
        let cy = (ih - arm_h) / 2;
        for y in 1..=ih {
            for x in 1..=iw {
                let in_h = x > cx && x <= cx + arm_w;
                let in_v = y > cy && y <= cy + arm_h;
                if !in_h && !in_v {
                    p.walls.insert(Cell::new(x, y));
                }
            }
        }
        p.start = Cell::new(cx + 1 + arm_w / 2, cy + 1 + arm_h / 2);
        GridSpec::try_new(p)
    }

    fn arm_width(interior: usize) -> usize {
        let mut arm = interior.div_ceil(3).max(1);
        if (interior - arm) % 2 == 1 {
            arm += 1;
        }
        arm.min(interior)
    }

    /// Two rooms split by a vertical wall at `x = width / 2`, connected by
    /// the openings at the given rows.
    pub fn two_rooms(width: usize, height: usize, opening_rows: &[usize]) -> Result<GridSpec> {
        let mut p = parts(width, height, Variant::TwoRooms);
        let wall_x = width / 2;
        for y in 1..height - 1 {
            if !opening_rows.contains(&y) {
                p.walls.insert(Cell::new(wall_x, y));
            }
        }
        p.openings = opening_rows.iter().map(|&y| Cell::new(wall_x, y)).collect();
        p.start = Cell::new(wall_x / 2, height / 2);
        GridSpec::try_new(p)
    }

    /// Default two-rooms layout: openings a third of the way in from the
    /// top and bottom walls.
    pub fn two_rooms_default(width: usize, height: usize) -> Result<GridSpec> {
        let ih = height - 2;
        let top = 1 + ih / 3;
        let bottom = height - 2 - ih / 3;
        if top == bottom {
            two_rooms(width, height, &[top])
        } else {
            two_rooms(width, height, &[top, bottom])
        }
    }

    /// Empty room with boxes placed horizontally around the centre.
    pub fn box_room(mode: BoxMode, width: usize, height: usize, boxes: usize) -> Result<GridSpec> {
        let mut p = parts(width, height, Variant::BoxRoom(mode));
        let count = if mode == BoxMode::Row { boxes.max(1) } else { 1 };
        let y = height / 2;
        let x0 = (width - count) / 2;
        p.box_cells = (0..count).map(|i| Cell::new(x0 + i, y)).collect();
        p.start = Cell::new(x0.saturating_sub(1).max(1), y);
        GridSpec::try_new(p)
    }

    /// Two rooms separated by a wall with a locked door; the key lies in
    /// the left room.
    pub fn key_door(width: usize, height: usize) -> Result<GridSpec> {
        let mut p = parts(width, height, Variant::KeyDoor);
        let wall_x = width / 2;
        let door_y = height / 2;
        for y in 1..height - 1 {
            if y != door_y {
                p.walls.insert(Cell::new(wall_x, y));
            }
        }
        p.door_cell = Some(Cell::new(wall_x, door_y));
        p.key_cell = Some(Cell::new(1.max(wall_x / 2), height - 2));
        p.start = Cell::new(1.max(wall_x / 2), 1);
        GridSpec::try_new(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn border_is_wall() {
        let g = layouts::empty_room(6, 5).unwrap();
        for x in 0..6 {
            assert!(g.is_wall(Cell::new(x, 0)) && g.is_wall(Cell::new(x, 4)));
        }
        for y in 0..5 {
            assert!(g.is_wall(Cell::new(0, y)) && g.is_wall(Cell::new(5, y)));
        }
        assert_eq!(g.free_cells().len(), 4 * 3);
    }

    #[test]
    fn overlapping_objects_rejected() {
        let mut p = GridParts {
            width: 6,
            height: 6,
            variant: Variant::KeyDoor,
            walls: BTreeSet::new(),
            door_cell: Some(Cell::new(2, 2)),
            key_cell: Some(Cell::new(2, 2)),
            box_cells: vec![],
            openings: vec![],
            start: Cell::new(1, 1),
        };
        assert!(GridSpec::try_new(p.clone()).is_err());
        p.key_cell = Some(Cell::new(0, 2));
        assert!(GridSpec::try_new(p.clone()).is_err());
        p.key_cell = Some(Cell::new(9, 2));
        assert!(GridSpec::try_new(p).is_err());
    }

    #[test]
    fn cross_room_is_symmetric() {
        let g = layouts::cross_room(11, 11).unwrap();
        let free = g.free_cells();
        for c in &free {
            let m = Cell::new(10 - c.x, c.y);
            let t = Cell::new(c.y, c.x);
            assert!(!g.is_wall(m) && !g.is_wall(t));
        }
        assert_eq!(free.len(), 9 * 3 * 2 - 9);
    }

    #[test]
    fn invalid_states_rejected() {
        let g = layouts::key_door(9, 7).unwrap();
        let mut s = g.initial_state();
        assert!(g.validate_state(&s).is_ok());
        s.door_open = true;
        assert!(g.validate_state(&s).is_err());
        s.has_key = true;
        assert!(g.validate_state(&s).is_ok());
        s.agent = Cell::new(0, 0);
        assert!(g.validate_state(&s).is_err());
        let mut s = g.initial_state();
        s.agent = g.door_cell().unwrap();
        assert!(g.validate_state(&s).is_err());
    }
}
