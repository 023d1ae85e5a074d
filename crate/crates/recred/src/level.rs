//! Static level model: rooms, objects, chest wiring, and the on-disk
//! JSON level format.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::grid::{Cell, Grid, Tile, MAX_ROOM_COLS, MAX_ROOM_ROWS};
use crate::ValidationReport;

/// Stable room identifier, e.g. `a:0:1`, `mem:s:0:b`, `start`.
pub type RoomId = String;

/// Stable object label, unique within its level.
pub type ObjectId = String;

/// Default cap on objects per room enforced by the validator. The in-game
/// bound is not documented; this is a configurable validator limit.
pub const DEFAULT_OBJECT_LIMIT: usize = 16;

/// Kinds of placeable objects. Jars exist only at runtime and are not part
/// of the level model, so they have no variant here.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectKind {
    Block,
    Key,
    Ring,
    Chest { target: RoomId },
    Crystal,
    /// Static 3-tall barrier anchored at its bottom cell; opened by a key.
    Door,
}

impl ObjectKind {
    pub fn display_char(&self) -> char {
        match self {
            ObjectKind::Block => 'B',
            ObjectKind::Key => 'K',
            ObjectKind::Ring => 'R',
            ObjectKind::Chest { .. } => 'C',
            ObjectKind::Crystal => '*',
            ObjectKind::Door => 'D',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    #[serde(flatten)]
    pub kind: ObjectKind,
    /// For doors this is the bottom cell of the 3-tall barrier.
    pub pos: Cell,
    #[serde(default)]
    pub glow: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub id: RoomId,
    #[serde(default)]
    pub label: String,
    pub tiles: Grid,
    /// Where the player appears when entering; also the pink flame cell in
    /// every non-start room.
    pub entry: Cell,
    /// Green flame cell, if the room has one.
    #[serde(default)]
    pub green_flame: Option<Cell>,
    pub objects: Vec<ObjectSpec>,
}

impl RoomSpec {
    pub fn object(&self, id: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub rooms: BTreeMap<RoomId, RoomSpec>,
    pub start_room: RoomId,
    /// Validator cap on objects per room.
    #[serde(default = "default_object_limit")]
    pub object_limit: usize,
}

fn default_object_limit() -> usize {
    DEFAULT_OBJECT_LIMIT
}

impl LevelSpec {
    pub fn new(rooms: Vec<RoomSpec>, start_room: impl Into<RoomId>) -> LevelSpec {
        LevelSpec {
            rooms: rooms.into_iter().map(|r| (r.id.clone(), r)).collect(),
            start_room: start_room.into(),
            object_limit: DEFAULT_OBJECT_LIMIT,
        }
    }

    pub fn room(&self, id: &str) -> Option<&RoomSpec> {
        self.rooms.get(id)
    }
}

/// Lists every invariant violation; empty iff the level is well-formed.
pub fn validate_level(level: &LevelSpec) -> ValidationReport {
    let mut report = ValidationReport::new();
    if !level.rooms.contains_key(&level.start_room) {
        report.push(format!("start room {:?} does not exist", level.start_room));
    }
    let mut crystal_count = 0usize;
    for room in level.rooms.values() {
        validate_room_into(room, level, &mut report);
        crystal_count += room
            .objects
            .iter()
            .filter(|o| o.kind == ObjectKind::Crystal)
            .count();
        if room.objects.len() > level.object_limit {
            report.push(format!(
                "room {:?} has {} objects, exceeding limit {}",
                room.id,
                room.objects.len(),
                level.object_limit
            ));
        }
    }
    if crystal_count != 1 {
        report.push(format!("level has {crystal_count} crystals, expected exactly 1"));
    }
    if let Some(start) = level.rooms.get(&level.start_room) {
        if start.green_flame.is_some() {
            // Green flames are permitted anywhere but the start room never
            // needs one; flag only real problems, so no check here.
        }
        let _ = start;
    }
    // Reachability: every non-start room should be the target of some chest.
    let mut reachable: BTreeSet<&RoomId> = BTreeSet::new();
    let mut queue: VecDeque<&RoomId> = VecDeque::new();
    reachable.insert(&level.start_room);
    queue.push_back(&level.start_room);
    while let Some(id) = queue.pop_front() {
        let Some(room) = level.rooms.get(id) else {
            continue;
        };
        for obj in &room.objects {
            if let ObjectKind::Chest { target } = &obj.kind {
                if let Some((key, _)) = level.rooms.get_key_value(target) {
                    if reachable.insert(key) {
                        queue.push_back(key);
                    }
                }
            }
        }
    }
    for id in level.rooms.keys() {
        if !reachable.contains(id) {
            report.push_warning(format!("room {id:?} is not reachable from any chest"));
        }
    }
    report
}

fn validate_room_into(room: &RoomSpec, level: &LevelSpec, report: &mut ValidationReport) {
    let id = &room.id;
    let g = &room.tiles;
    if g.height() > MAX_ROOM_ROWS || g.width() > MAX_ROOM_COLS {
        report.push(format!(
            "room {id:?} is {}x{}, exceeding {MAX_ROOM_ROWS}x{MAX_ROOM_COLS}",
            g.height(),
            g.width()
        ));
    }
    if g.at(room.entry) != Tile::Empty || g.at(room.entry.above()) != Tile::Empty {
        report.push(format!(
            "room {id:?} entry {:?} does not have two empty cells for the player",
            room.entry
        ));
    }
    if let Some(flame) = room.green_flame {
        if !g.in_bounds(flame) || g.at(flame) != Tile::Empty {
            report.push(format!("room {id:?} green flame {flame:?} is not an empty cell"));
        }
    }
    let mut seen_ids = BTreeSet::new();
    for obj in &room.objects {
        if !seen_ids.insert(&obj.id) {
            report.push(format!("room {id:?} has duplicate object id {:?}", obj.id));
        }
        if !g.in_bounds(obj.pos) {
            report.push(format!(
                "room {id:?} object {:?} at {:?} is out of bounds",
                obj.id, obj.pos
            ));
            continue;
        }
        match &obj.kind {
            ObjectKind::Door => {
                for dr in 0..3 {
                    let c = obj.pos.shifted(0, -dr);
                    if !g.in_bounds(c) {
                        report.push(format!(
                            "room {id:?} door {:?} cell {c:?} out of bounds",
                            obj.id
                        ));
                    }
                }
            }
            ObjectKind::Chest { target } => {
                if !level.rooms.contains_key(target) {
                    report.push(format!(
                        "room {id:?} chest {:?} targets missing room {target:?}",
                        obj.id
                    ));
                }
                if g.at(obj.pos) != Tile::Empty {
                    report.push(format!(
                        "room {id:?} chest {:?} sits in non-empty tile",
                        obj.id
                    ));
                }
            }
            _ => {
                if g.at(obj.pos) != Tile::Empty {
                    report.push(format!(
                        "room {id:?} object {:?} sits in non-empty tile at {:?}",
                        obj.id, obj.pos
                    ));
                }
            }
        }
    }
}

/// Renders a room as ASCII art: `#`/`.`/`^` tiles with objects overlaid.
pub fn render_ascii(room: &RoomSpec) -> String {
    let mut rows: Vec<Vec<char>> = room
        .tiles
        .rows()
        .into_iter()
        .map(|r| r.chars().collect())
        .collect();
    let put = |cell: Cell, ch: char, rows: &mut Vec<Vec<char>>| {
        if cell.row >= 0
            && cell.col >= 0
            && (cell.row as usize) < rows.len()
            && (cell.col as usize) < rows[cell.row as usize].len()
        {
            rows[cell.row as usize][cell.col as usize] = ch;
        }
    };
    for obj in &room.objects {
        match obj.kind {
            ObjectKind::Door => {
                for dr in 0..3 {
                    put(obj.pos.shifted(0, -dr), 'D', &mut rows);
                }
            }
            _ => put(obj.pos, obj.kind.display_char(), &mut rows),
        }
    }
    if let Some(flame) = room.green_flame {
        put(flame, 'G', &mut rows);
    }
    put(room.entry, 'P', &mut rows);
    rows.into_iter()
        .map(|r| r.into_iter().collect::<String>())
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, thiserror::Error)]
pub enum LevelFormatError {
    #[error("level JSON parse error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Serializes a level to the canonical JSON document.
pub fn save_level(level: &LevelSpec) -> Vec<u8> {
    serde_json::to_vec_pretty(&LevelDoc::from(level)).expect("level serialization")
}

/// Loads a level from its JSON document.
pub fn load_level(bytes: &[u8]) -> Result<LevelSpec, LevelFormatError> {
    let doc: LevelDoc = serde_json::from_slice(bytes)?;
    Ok(doc.into_level()?)
}

/// On-disk document shape. Tile rows are strings of `#`, `.`, `^`.
#[derive(Serialize, Deserialize)]
struct LevelDoc {
    rooms: Vec<RoomDoc>,
    start_room: RoomId,
    #[serde(default = "default_object_limit")]
    object_limit: usize,
}

#[derive(Serialize, Deserialize)]
struct RoomDoc {
    id: RoomId,
    #[serde(default)]
    label: String,
    width: usize,
    height: usize,
    tiles: Vec<String>,
    entry: [i32; 2],
    #[serde(default)]
    green_flame: Option<[i32; 2]>,
    objects: Vec<ObjectDoc>,
}

#[derive(Serialize, Deserialize)]
struct ObjectDoc {
    id: ObjectId,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<RoomId>,
    pos: [i32; 2],
    #[serde(default)]
    glow: bool,
}

impl From<&LevelSpec> for LevelDoc {
    fn from(level: &LevelSpec) -> LevelDoc {
        LevelDoc {
            rooms: level
                .rooms
                .values()
                .map(|r| RoomDoc {
                    id: r.id.clone(),
                    label: r.label.clone(),
                    width: r.tiles.width(),
                    height: r.tiles.height(),
                    tiles: r.tiles.rows(),
                    entry: [r.entry.col, r.entry.row],
                    green_flame: r.green_flame.map(|c| [c.col, c.row]),
                    objects: r
                        .objects
                        .iter()
                        .map(|o| {
                            let (kind, target) = match &o.kind {
                                ObjectKind::Block => ("block", None),
                                ObjectKind::Key => ("key", None),
                                ObjectKind::Ring => ("ring", None),
                                ObjectKind::Chest { target } => ("chest", Some(target.clone())),
                                ObjectKind::Crystal => ("crystal", None),
                                ObjectKind::Door => ("door", None),
                            };
                            ObjectDoc {
                                id: o.id.clone(),
                                kind: kind.to_string(),
                                target,
                                pos: [o.pos.col, o.pos.row],
                                glow: o.glow,
                            }
                        })
                        .collect(),
                })
                .collect(),
            start_room: level.start_room.clone(),
            object_limit: level.object_limit,
        }
    }
}

impl LevelDoc {
    fn into_level(self) -> Result<LevelSpec, serde_json::Error> {
        use serde::de::Error;
        let mut rooms = BTreeMap::new();
        for r in self.rooms {
            let tiles = Grid::from_rows(&r.tiles).ok_or_else(|| {
                serde_json::Error::custom(format!(
                    "room {:?}: malformed tile rows (expected uniform rows of '#', '.', '^')",
                    r.id
                ))
            })?;
            if tiles.width() != r.width || tiles.height() != r.height {
                return Err(serde_json::Error::custom(format!(
                    "room {:?}: declared size {}x{} does not match tile rows {}x{}",
                    r.id,
                    r.height,
                    r.width,
                    tiles.height(),
                    tiles.width()
                )));
            }
            let objects = r
                .objects
                .into_iter()
                .map(|o| {
                    let kind = match o.kind.as_str() {
                        "block" => ObjectKind::Block,
                        "key" => ObjectKind::Key,
                        "ring" => ObjectKind::Ring,
                        "crystal" => ObjectKind::Crystal,
                        "door" => ObjectKind::Door,
                        "chest" => ObjectKind::Chest {
                            target: o.target.clone().ok_or_else(|| {
                                serde_json::Error::custom(format!(
                                    "chest {:?} missing target",
                                    o.id
                                ))
                            })?,
                        },
                        other => {
                            return Err(serde_json::Error::custom(format!(
                                "unknown object kind {other:?}"
                            )))
                        }
                    };
                    Ok(ObjectSpec {
                        id: o.id,
                        kind,
                        pos: Cell::new(o.pos[0], o.pos[1]),
                        glow: o.glow,
                    })
                })
                .collect::<Result<Vec<_>, serde_json::Error>>()?;
            rooms.insert(
                r.id.clone(),
                RoomSpec {
                    id: r.id,
                    label: r.label,
                    tiles,
                    entry: Cell::new(r.entry[0], r.entry[1]),
                    green_flame: r.green_flame.map(|c| Cell::new(c[0], c[1])),
                    objects,
                },
            );
        }
        Ok(LevelSpec {
            rooms,
            start_room: self.start_room,
            object_limit: self.object_limit,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_room(id: &str) -> RoomSpec {
        let tiles = Grid::from_rows(&[
            "#####", //
            "#...#",
            "#...#",
            "#####",
        ])
        .unwrap();
        RoomSpec {
            id: id.to_string(),
            label: String::new(),
            tiles,
            entry: Cell::new(1, 2),
            green_flame: None,
            objects: vec![],
        }
    }

    fn tiny_level() -> LevelSpec {
        let mut start = tiny_room("start");
        start.objects.push(ObjectSpec {
            id: "crystal".into(),
            kind: ObjectKind::Crystal,
            pos: Cell::new(3, 1),
            glow: false,
        });
        LevelSpec::new(vec![start], "start")
    }

    #[test]
    fn tiny_level_valid() {
        assert!(validate_level(&tiny_level()).is_empty());
    }

    #[test]
    fn dangling_chest_invalid() {
        let mut level = tiny_level();
        level
            .rooms
            .get_mut("start")
            .unwrap()
            .objects
            .push(ObjectSpec {
                id: "c".into(),
                kind: ObjectKind::Chest {
                    target: "missing".into(),
                },
                pos: Cell::new(2, 2),
                glow: false,
            });
        let report = validate_level(&level);
        assert!(report.errors().iter().any(|e| e.contains("missing")));
    }

    #[test]
    fn two_crystals_invalid() {
        let mut level = tiny_level();
        level
            .rooms
            .get_mut("start")
            .unwrap()
            .objects
            .push(ObjectSpec {
                id: "crystal2".into(),
                kind: ObjectKind::Crystal,
                pos: Cell::new(2, 1),
                glow: false,
            });
        assert!(!validate_level(&level).is_empty());
    }

    #[test]
    fn render_overlays_objects() {
        let mut room = tiny_room("r");
        room.objects.push(ObjectSpec {
            id: "b".into(),
            kind: ObjectKind::Block,
            pos: Cell::new(2, 2),
            glow: false,
        });
        let art = render_ascii(&room);
        assert!(art.lines().nth(2).unwrap().contains('B'));
        assert!(art.lines().nth(2).unwrap().starts_with('#'));
    }

    #[test]
    fn save_load_round_trip() {
        let level = tiny_level();
        let bytes = save_level(&level);
        let back = load_level(&bytes).unwrap();
        assert_eq!(back, level);
    }

    #[test]
    fn truncated_file_errors() {
        let mut bytes = save_level(&tiny_level());
        bytes.truncate(bytes.len() / 2);
        assert!(load_level(&bytes).is_err());
    }

    #[test]
    fn unknown_kind_named_in_error() {
        let bytes = br####"{
            "rooms": [{
                "id": "r", "width": 3, "height": 2,
                "tiles": ["###", "###"],
                "entry": [1, 1],
                "objects": [{"id": "x", "kind": "cauldron", "pos": [1, 1]}]
            }],
            "start_room": "r"
        }"####;
        let err = load_level(bytes).unwrap_err();
        assert!(err.to_string().contains("cauldron"));
    }
}
