use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{layouts, parse_ascii, BoxMode, Cell, GridParts, GridSpec, Variant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    EmptyRoom,
    CrossRoom,
    TwoRooms,
    BoxRoomFixed,
    BoxRoomMovable,
    BoxRoomRow,
    KeyDoor,
}

impl From<VariantName> for Variant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::EmptyRoom => Variant::EmptyRoom,
            VariantName::CrossRoom => Variant::CrossRoom,
            VariantName::TwoRooms => Variant::TwoRooms,
            VariantName::BoxRoomFixed => Variant::BoxRoom(BoxMode::Fixed),
            VariantName::BoxRoomMovable => Variant::BoxRoom(BoxMode::Movable),
            VariantName::BoxRoomRow => Variant::BoxRoom(BoxMode::Row),
            VariantName::KeyDoor => Variant::KeyDoor,
        }
    }
}

/// Key-value environment definition, e.g. the `[environment]` table of an
/// experiment file:
///
/// ```toml
/// variant = "two_rooms"
/// width = 12
/// height = 9
/// openings = [[6, 3], [6, 5]]
/// ```
///
/// Unset object cells fall back to the variant's default layout. A `map`
/// string (ASCII legend of [`GridSpec::ascii`]) replaces the layout
/// entirely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub variant: VariantName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub door: Option<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<Cell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<Cell>>,
    /// Box count for `box_room_row` when `boxes` is unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub openings: Option<Vec<Cell>>,
    /// Extra interior walls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walls: Option<Vec<Cell>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<String>,
}

impl EnvConfig {
    pub fn new(variant: VariantName, width: usize, height: usize) -> Self {
        Self {
            variant,
            width: Some(width),
            height: Some(height),
            start: None,
            door: None,
            key: None,
            boxes: None,
            box_count: None,
            openings: None,
            walls: None,
            map: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build(&self) -> Result<GridSpec> {
        let variant: Variant = self.variant.into();
        if let Some(map) = &self.map {
            return parse_ascii(map, variant);
        }
        let (w, h) = (self.width.unwrap_or(10), self.height.unwrap_or(10));
        let base = match self.variant {
            VariantName::EmptyRoom => layouts::empty_room(w, h)?,
            VariantName::CrossRoom => layouts::cross_room(w, h)?,
            VariantName::TwoRooms => match &self.openings {
                Some(o) => layouts::two_rooms(w, h, &o.iter().map(|c| c.y).collect::<Vec<_>>())?,
                None => layouts::two_rooms_default(w, h)?,
            },
            VariantName::BoxRoomFixed => layouts::box_room(BoxMode::Fixed, w, h, 1)?,
            VariantName::BoxRoomMovable => layouts::box_room(BoxMode::Movable, w, h, 1)?,
            VariantName::BoxRoomRow => {
                layouts::box_room(BoxMode::Row, w, h, self.box_count.unwrap_or(3))?
            }
            VariantName::KeyDoor => layouts::key_door(w, h)?,
        };
        let mut walls: BTreeSet<Cell> = base.walls().clone();
        walls.extend(self.walls.iter().flatten().copied());
        GridSpec::try_new(GridParts {
            width: w,
            height: h,
            variant,
            walls,
            door_cell: self.door.or(base.door_cell()),
            key_cell: self.key.or(base.key_cell()),
            box_cells: self.boxes.clone().unwrap_or_else(|| base.box_cells().to_vec()),
            openings: base.openings().to_vec(),
            start: self.start.unwrap_or(base.start()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_build() {
        let cfg = EnvConfig::from_toml(
            r#"
variant = "key_door"
width = 11
height = 7
key = [2, 5]
"#,
        )
        .unwrap();
        let g = cfg.build().unwrap();
        assert_eq!(g.key_cell(), Some(Cell::new(2, 5)));
        assert_eq!(g.door_cell(), Some(Cell::new(5, 3)));
        assert_eq!(EnvConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_named_in_error() {
        let err = EnvConfig::from_toml("variant = \"empty_room\"\nwidht = 5\n").unwrap_err();
        assert!(err.to_string().contains("widht"), "{err}");
    }

    #[test]
    fn map_overrides_layout() {
        let cfg = EnvConfig {
            map: Some("#####\n#A.K#\n#####\n".into()),
            ..EnvConfig::new(VariantName::KeyDoor, 0, 0)
        };
        let g = cfg.build().unwrap();
        assert_eq!(g.width(), 5);
        assert_eq!(g.key_cell(), Some(Cell::new(3, 1)));
    }
}
