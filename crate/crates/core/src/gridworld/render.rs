use std::collections::BTreeSet;

use super::{Cell, EnvState, GridParts, GridSpec, Variant};
use crate::error::{Error, Result};

/// Side length of the default square observation.
pub const DEFAULT_RESOLUTION: usize = 20;

const BACKGROUND: f64 = 0.0;
const WALL: f64 = 1.0;
const AGENT: f64 = 0.5;
const BOX: f64 = 0.75;
const KEY: f64 = 0.25;
const DOOR_CLOSED: f64 = 0.6;
const DOOR_OPEN: f64 = 0.1;

/// Square greyscale image, row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    size: usize,
    pixels: Vec<f64>,
}

impl Observation {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.size + x]
    }
}

pub fn render(spec: &GridSpec, s: &EnvState) -> Result<Observation> {
    render_with_size(spec, s, DEFAULT_RESOLUTION)
}

/// One grid cell maps to one pixel; the grid sits in the top-left corner
/// and the remainder is background.
pub fn render_with_size(spec: &GridSpec, s: &EnvState, size: usize) -> Result<Observation> {
    if spec.width() > size || spec.height() > size {
        return Err(Error::RenderTooSmall {
            width: spec.width(),
            height: spec.height(),
            size,
        });
    }
    spec.validate_state(s)?;
    let mut pixels = vec![BACKGROUND; size * size];
    let mut put = |c: Cell, v: f64| pixels[c.y * size + c.x] = v;
    for &w in spec.walls() {
        put(w, WALL);
    }
    if let Some(d) = spec.door_cell() {
        put(d, if s.door_open { DOOR_OPEN } else { DOOR_CLOSED });
    }
    if let Some(k) = spec.key_cell() {
        if !s.has_key {
            put(k, KEY);
        }
    }
    for &b in &s.boxes {
        put(b, BOX);
    }
    put(s.agent, AGENT);
    Ok(Observation { size, pixels })
}

impl GridSpec {
    /// ASCII dump: `#` wall, `.` floor, `A` agent, `K` key, `D` closed door,
    /// `d` open door, `B` box.
    pub fn ascii(&self, s: &EnvState) -> String {
        let mut out = String::with_capacity((self.width() + 1) * self.height());
        for y in 0..self.height() {
            for x in 0..self.width() {
                let c = Cell::new(x, y);
                let ch = if c == s.agent {
                    'A'
                } else if self.is_wall(c) {
                    '#'
                } else if s.boxes.contains(&c) {
                    'B'
                } else if self.door_cell() == Some(c) {
                    if s.door_open {
                        'd'
                    } else {
                        'D'
                    }
                } else if self.key_cell() == Some(c) && !s.has_key {
                    'K'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses an ASCII map (same legend as [`GridSpec::ascii`]) into a layout.
/// The map must contain exactly one `A`, which becomes the start cell.
pub fn parse_ascii(map: &str, variant: Variant) -> Result<GridSpec> {
    let rows: Vec<&str> = map
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let height = rows.len();
    let width = rows.first().map_or(0, |r| r.chars().count());
    if rows.iter().any(|r| r.chars().count() != width) {
        return Err(Error::InvalidSpec("ragged ascii map".into()));
    }
    let mut walls = BTreeSet::new();
    let (mut door, mut key, mut boxes, mut start) = (None, None, Vec::new(), None);
    for (y, row) in rows.iter().enumerate() {
        for (x, ch) in row.chars().enumerate() {
            let c = Cell::new(x, y);
            match ch {
                '#' => {
                    walls.insert(c);
                }
                '.' => {}
                'A' => {
                    if start.replace(c).is_some() {
                        return Err(Error::InvalidSpec("more than one agent in map".into()));
                    }
                }
                'K' => key = Some(c),
                'D' => door = Some(c),
                'B' => boxes.push(c),
                other => {
                    return Err(Error::InvalidSpec(format!("unknown map symbol {other:?}")));
                }
            }
        }
    }
    let start = start.ok_or_else(|| Error::InvalidSpec("map has no agent".into()))?;
    GridSpec::try_new(GridParts {
        width,
        height,
        variant,
        walls,
        door_cell: door,
        key_cell: key,
        box_cells: boxes,
        openings: Vec::new(),
        start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{enumerate_states, layouts, BoxMode, DEFAULT_STATE_CAP};
    use std::collections::HashSet;

    #[test]
    fn background_and_agent() {
        let g = layouts::empty_room(5, 5).unwrap();
        let o = render(&g, &g.state_at(Cell::new(2, 2))).unwrap();
        assert_eq!(o.pixels().len(), 400);
        assert_eq!(o.at(1, 1), 0.0);
        assert_eq!(o.at(2, 2), 0.5);
        assert_eq!(o.at(0, 0), 1.0);
        assert_eq!(o.at(10, 10), 0.0);
        let o2 = render(&g, &g.state_at(Cell::new(1, 2))).unwrap();
        assert_ne!(o, o2);
    }

    #[test]
    fn key_pixel_diff() {
        let g = layouts::key_door(9, 7).unwrap();
        let a = g.state_at(Cell::new(6, 2));
        let mut b = a.clone();
        b.has_key = true;
        let (oa, ob) = (render(&g, &a).unwrap(), render(&g, &b).unwrap());
        let diff: Vec<usize> = (0..400).filter(|&i| oa.pixels()[i] != ob.pixels()[i]).collect();
        let k = g.key_cell().unwrap();
        assert_eq!(diff, vec![k.y * 20 + k.x]);
        assert_eq!(oa.at(k.x, k.y), 0.25);
    }

    #[test]
    fn oversized_grid_rejected() {
        let g = layouts::empty_room(21, 5).unwrap();
        assert!(matches!(
            render(&g, &g.initial_state()),
            Err(Error::RenderTooSmall { .. })
        ));
    }

    #[test]
    fn injective_on_small_envs() {
        for g in [
            layouts::key_door(9, 7).unwrap(),
            layouts::box_room(BoxMode::Movable, 7, 6, 1).unwrap(),
            layouts::two_rooms_default(12, 9).unwrap(),
        ] {
            let states = enumerate_states(&g, DEFAULT_STATE_CAP).unwrap();
            let mut seen = HashSet::new();
            for s in &states {
                let o = render(&g, s).unwrap();
                let bits: Vec<u64> = o.pixels().iter().map(|p| p.to_bits()).collect();
                assert!(seen.insert(bits));
            }
        }
    }

    #[test]
    fn ascii_roundtrip() {
        let g = layouts::key_door(9, 7).unwrap();
        let s = g.initial_state();
        let dump = g.ascii(&s);
        let back = parse_ascii(&dump, Variant::KeyDoor).unwrap();
        assert_eq!(back.ascii(&back.initial_state()), dump);
        assert_eq!(back.key_cell(), g.key_cell());
        assert_eq!(back.door_cell(), g.door_cell());
    }
}
