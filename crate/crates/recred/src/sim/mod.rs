//! Discrete operational semantics: player movement, object manipulation,
//! chest/jar room stack, green-glow global state, and win detection.
//!
//! Kinematics are tile-exact. A jump rises exactly 3 rows (2 while
//! carrying), truncated by solid cells above the head, then drifts up to 2
//! columns, then falls straight down. Ledges support the player from above,
//! pass the player during upward rise, block every other player move, and
//! are invisible to objects.

mod planner;
mod search;

pub use planner::{room_reach, GoalKind, PlanOutcome};
pub use search::{bounded_search, SearchLimits, SearchOutcome};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::grid::{Cell, Dir, Grid, Tile};
use crate::level::{LevelSpec, ObjectId, ObjectKind, RoomId, RoomSpec};

/// Rise height of a jump with free hands.
pub const JUMP_RISE_FREE: i32 = 3;
/// Rise height of a jump while carrying an object.
pub const JUMP_RISE_CARRYING: i32 = 2;
/// Maximum horizontal drift during a jump.
pub const MAX_DRIFT: i32 = 2;
/// Rise of a vertical throw before the object falls back.
pub const THROW_UP_RISE: i32 = 3;

/// Runtime object kind. Unlike the level model this includes jars, which
/// exist only at runtime.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RtKind {
    Block,
    Key,
    Ring,
    Chest { target: RoomId },
    Crystal,
    Door,
    Jar(Arc<JarValue>),
}

impl RtKind {
    fn from_spec(kind: &ObjectKind) -> RtKind {
        match kind {
            ObjectKind::Block => RtKind::Block,
            ObjectKind::Key => RtKind::Key,
            ObjectKind::Ring => RtKind::Ring,
            ObjectKind::Chest { target } => RtKind::Chest {
                target: target.clone(),
            },
            ObjectKind::Crystal => RtKind::Crystal,
            ObjectKind::Door => RtKind::Door,
        }
    }

    pub fn is_carryable(&self) -> bool {
        !matches!(self, RtKind::Crystal | RtKind::Door)
    }
}

/// An object placed in a room instance (or carried by the player).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlacedObject {
    pub id: ObjectId,
    pub kind: RtKind,
    /// For doors, the bottom cell of the 3-tall barrier.
    pub pos: Cell,
    pub glow: bool,
}

/// Immutable snapshot of a room taken when its green flame was used.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JarValue {
    pub snapshot: RoomInstance,
    /// Where the player reappears: the green flame's former cell.
    pub resume_at: Cell,
}

/// A live room: its static spec id plus all dynamic object state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoomInstance {
    pub spec_id: RoomId,
    pub objects: Vec<PlacedObject>,
    pub green_flame_present: bool,
}

impl RoomInstance {
    pub fn object(&self, id: &str) -> Option<&PlacedObject> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// How the player left a suspended room.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Via {
    Chest { object: ObjectId },
    Jar { object: ObjectId },
}

/// A suspended parent room on the call stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub room: RoomInstance,
    pub player_return: Cell,
    pub player_facing: Dir,
    pub via: Via,
}

/// Persistent state of a green-glowing object, shared by every
/// instantiation of its room.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GlowState {
    Door { home: RoomId, open: bool },
    Object { kind: RtKind, room: RoomId, pos: Cell },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlayerState {
    pub foot: Cell,
    pub facing: Dir,
    pub carrying: Option<PlacedObject>,
}

impl PlayerState {
    pub fn head(&self) -> Cell {
        self.foot.above()
    }
}

/// One primitive player action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    MoveLeft,
    MoveRight,
    /// Jump with horizontal drift in -2..=2 applied at the apex.
    Jump { drift: i32 },
    Grab,
    Drop,
    Throw { dir: ThrowDir },
    /// Enter the chest or jar under the player's feet.
    Enter,
    ExitPink,
    ExitGreen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThrowDir {
    Left,
    Right,
    Up,
}

impl Action {
    /// All actions in a fixed order, used by planners and search.
    pub fn enumerate() -> [Action; 12] {
        [
            Action::MoveLeft,
            Action::MoveRight,
            Action::Jump { drift: 0 },
            Action::Jump { drift: -1 },
            Action::Jump { drift: 1 },
            Action::Jump { drift: -2 },
            Action::Jump { drift: 2 },
            Action::Grab,
            Action::Drop,
            Action::Throw { dir: ThrowDir::Left },
            Action::Throw { dir: ThrowDir::Right },
            Action::Throw { dir: ThrowDir::Up },
        ]
    }

    /// Actions that never leave the current room.
    pub fn enumerate_in_room() -> &'static [Action] {
        const IN_ROOM: [Action; 12] = [
            Action::MoveLeft,
            Action::MoveRight,
            Action::Jump { drift: 0 },
            Action::Jump { drift: -1 },
            Action::Jump { drift: 1 },
            Action::Jump { drift: -2 },
            Action::Jump { drift: 2 },
            Action::Grab,
            Action::Drop,
            Action::Throw { dir: ThrowDir::Left },
            Action::Throw { dir: ThrowDir::Right },
            Action::Throw { dir: ThrowDir::Up },
        ];
        &IN_ROOM
    }

    /// All actions including room transitions.
    pub fn enumerate_all() -> &'static [Action] {
        const ALL: [Action; 15] = [
            Action::MoveLeft,
            Action::MoveRight,
            Action::Jump { drift: 0 },
            Action::Jump { drift: -1 },
            Action::Jump { drift: 1 },
            Action::Jump { drift: -2 },
            Action::Jump { drift: 2 },
            Action::Grab,
            Action::Drop,
            Action::Throw { dir: ThrowDir::Left },
            Action::Throw { dir: ThrowDir::Right },
            Action::Throw { dir: ThrowDir::Up },
            Action::Enter,
            Action::ExitPink,
            Action::ExitGreen,
        ];
        &ALL
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("game already won")]
    GameOver,
    #[error("movement blocked")]
    Blocked,
    #[error("jump drift out of range")]
    BadDrift,
    #[error("nothing within reach to grab")]
    NothingToGrab,
    #[error("already carrying an object")]
    HandsFull,
    #[error("not carrying anything")]
    NothingCarried,
    #[error("drop target blocked")]
    DropBlocked,
    #[error("no chest or jar underfoot")]
    NothingToEnter,
    #[error("no pink flame here")]
    NoPinkFlame,
    #[error("no green flame here")]
    NoGreenFlame,
    #[error("cannot carry an object through a green flame")]
    CarryingAtGreenFlame,
    #[error("already at the bottom of the room stack")]
    AtStackBottom,
    #[error("player fell out of the room")]
    FellOut,
    #[error("invalid level: {0}")]
    InvalidLevel(String),
}

/// Full game state: suspended-room stack, live room, player, glow store.
#[derive(Debug, Clone)]
pub struct GameState {
    pub level: Arc<LevelSpec>,
    pub stack: Vec<Arc<Frame>>,
    pub current: RoomInstance,
    pub player: PlayerState,
    pub glow: BTreeMap<ObjectId, GlowState>,
    jar_counter: u32,
    pub steps: u64,
    pub won: bool,
}

/// Initializes play: player at the start room entry, glow store seeded from
/// every glowing object spec.
pub fn init(level: Arc<LevelSpec>) -> Result<GameState, RuleError> {
    let report = crate::level::validate_level(&level);
    if !report.is_empty() {
        return Err(RuleError::InvalidLevel(report.errors().join("; ")));
    }
    let mut glow = BTreeMap::new();
    for room in level.rooms.values() {
        for obj in &room.objects {
            if obj.glow {
                let gs = match obj.kind {
                    ObjectKind::Door => GlowState::Door {
                        home: room.id.clone(),
                        open: false,
                    },
                    _ => GlowState::Object {
                        kind: RtKind::from_spec(&obj.kind),
                        room: room.id.clone(),
                        pos: obj.pos,
                    },
                };
                glow.insert(obj.id.clone(), gs);
            }
        }
    }
    let start = level
        .rooms
        .get(&level.start_room)
        .ok_or_else(|| RuleError::InvalidLevel("missing start room".into()))?;
    let mut state = GameState {
        level: level.clone(),
        stack: Vec::new(),
        current: RoomInstance {
            spec_id: start.id.clone(),
            objects: Vec::new(),
            green_flame_present: false,
        },
        player: PlayerState {
            foot: start.entry,
            facing: Dir::Right,
            carrying: None,
        },
        glow,
        jar_counter: 0,
        steps: 0,
        won: false,
    };
    state.current = state.instantiate(&level.start_room);
    state.settle_player()?;
    Ok(state)
}

impl GameState {
    pub fn spec(&self) -> &RoomSpec {
        self.level
            .rooms
            .get(&self.current.spec_id)
            .expect("current room spec exists")
    }

    fn grid(&self) -> &Grid {
        &self.spec().tiles
    }

    /// Builds a fresh instance of `spec_id` and overlays glow-store state.
    fn instantiate(&self, spec_id: &str) -> RoomInstance {
        let spec = self.level.rooms.get(spec_id).expect("room spec exists");
        let mut inst = RoomInstance {
            spec_id: spec.id.clone(),
            objects: spec
                .objects
                .iter()
                .map(|o| PlacedObject {
                    id: o.id.clone(),
                    kind: RtKind::from_spec(&o.kind),
                    pos: o.pos,
                    glow: o.glow,
                })
                .collect(),
            green_flame_present: spec.green_flame.is_some(),
        };
        self.overlay_glow(&mut inst);
        settle_objects(&spec.tiles, &mut inst.objects, &mut BTreeMap::new());
        inst
    }

    /// Re-applies glow-store state to a room instance (fresh or restored).
    fn overlay_glow(&self, inst: &mut RoomInstance) {
        for (id, gs) in &self.glow {
            match gs {
                GlowState::Door { home, open } => {
                    if *open && inst.spec_id == *home {
                        inst.objects.retain(|o| o.id != *id);
                    }
                }
                GlowState::Object { kind, room, pos } => {
                    if inst.spec_id == *room {
                        if let Some(obj) = inst.objects.iter_mut().find(|o| o.id == *id) {
                            obj.pos = *pos;
                        } else {
                            inst.objects.push(PlacedObject {
                                id: id.clone(),
                                kind: kind.clone(),
                                pos: *pos,
                                glow: true,
                            });
                        }
                    } else {
                        inst.objects.retain(|o| o.id != *id);
                    }
                }
            }
        }
    }

    /// Records the live positions of glowing objects after an action.
    fn sync_glow(&mut self) {
        let spec_id = self.current.spec_id.clone();
        for obj in &self.current.objects {
            if obj.glow {
                match obj.kind {
                    RtKind::Door => {
                        self.glow.insert(
                            obj.id.clone(),
                            GlowState::Door {
                                home: spec_id.clone(),
                                open: false,
                            },
                        );
                    }
                    _ => {
                        self.glow.insert(
                            obj.id.clone(),
                            GlowState::Object {
                                kind: obj.kind.clone(),
                                room: spec_id.clone(),
                                pos: obj.pos,
                            },
                        );
                    }
                }
            }
        }
        if let Some(carried) = &self.player.carrying {
            if carried.glow {
                self.glow.insert(
                    carried.id.clone(),
                    GlowState::Object {
                        kind: carried.kind.clone(),
                        room: spec_id,
                        pos: self.player.head(),
                    },
                );
            }
        }
    }

    /// Closed-door test: doors block 3 cells up from their anchor.
    fn door_at(&self, cell: Cell) -> Option<usize> {
        self.current.objects.iter().position(|o| {
            o.kind == RtKind::Door
                && o.pos.col == cell.col
                && cell.row <= o.pos.row
                && cell.row >= o.pos.row - 2
        })
    }

    fn block_at(&self, cell: Cell) -> bool {
        self.current
            .objects
            .iter()
            .any(|o| o.kind == RtKind::Block && o.pos == cell)
    }

    /// True when the player's body may not occupy this cell.
    fn blocks_player(&self, cell: Cell) -> bool {
        match self.grid().at(cell) {
            Tile::Solid | Tile::Ledge => true,
            Tile::Empty => self.door_at(cell).is_some() || self.block_at(cell),
        }
    }

    /// True when a rising head may not pass into this cell. Ledges pass.
    fn blocks_rise(&self, cell: Cell) -> bool {
        match self.grid().at(cell) {
            Tile::Solid => true,
            Tile::Ledge => false,
            Tile::Empty => self.door_at(cell).is_some() || self.block_at(cell),
        }
    }

    /// True when the player is supported standing at `foot`.
    fn supports_player(&self, below_foot: Cell) -> bool {
        match self.grid().at(below_foot) {
            Tile::Solid | Tile::Ledge => true,
            Tile::Empty => self.door_at(below_foot).is_some() || self.block_at(below_foot),
        }
    }

    /// Straight fall from the current position. Records swept cells.
    fn fall_player(&mut self, sweep: &mut Vec<Cell>) -> Result<(), RuleError> {
        loop {
            let below = self.player.foot.below();
            if below.row as usize >= self.grid().height() {
                return Err(RuleError::FellOut);
            }
            if self.supports_player(below) {
                return Ok(());
            }
            self.player.foot = below;
            sweep.push(self.player.foot);
            sweep.push(self.player.head());
        }
    }

    fn settle_player(&mut self) -> Result<(), RuleError> {
        let mut sweep = Vec::new();
        self.fall_player(&mut sweep)?;
        self.check_win(&sweep);
        Ok(())
    }

    fn check_win(&mut self, sweep: &[Cell]) {
        if self.won {
            return;
        }
        let crystals: Vec<Cell> = self
            .current
            .objects
            .iter()
            .filter(|o| o.kind == RtKind::Crystal)
            .map(|o| o.pos)
            .collect();
        if crystals.is_empty() {
            return;
        }
        if sweep.iter().any(|c| crystals.contains(c)) {
            self.won = true;
        }
    }

    fn annihilate_door(&mut self, door_idx: usize) {
        let door = self.current.objects.remove(door_idx);
        if door.glow {
            self.glow.insert(
                door.id,
                GlowState::Door {
                    home: self.current.spec_id.clone(),
                    open: true,
                },
            );
        }
    }

    /// Applies one action, producing the deterministic successor state.
    pub fn apply(&self, action: Action) -> Result<GameState, RuleError> {
        if self.won {
            return Err(RuleError::GameOver);
        }
        let mut next = self.clone();
        next.steps += 1;
        let mut sweep = vec![next.player.foot, next.player.head()];
        match action {
            Action::MoveLeft => next.walk(Dir::Left, &mut sweep)?,
            Action::MoveRight => next.walk(Dir::Right, &mut sweep)?,
            Action::Jump { drift } => next.jump(drift, &mut sweep)?,
            Action::Grab => next.grab()?,
            Action::Drop => next.drop_carried()?,
            Action::Throw { dir } => next.throw(dir)?,
            Action::Enter => next.enter(&mut sweep)?,
            Action::ExitPink => next.exit_pink(&mut sweep)?,
            Action::ExitGreen => next.exit_green(&mut sweep)?,
        }
        next.settle_all_objects();
        next.check_win(&sweep);
        next.sync_glow();
        Ok(next)
    }

    fn walk(&mut self, dir: Dir, sweep: &mut Vec<Cell>) -> Result<(), RuleError> {
        self.player.facing = dir;
        let foot = self.player.foot.shifted(dir.dx(), 0);
        let head = foot.above();
        // A carried key opens a door the player walks into.
        if self.player.carrying.as_ref().map(|c| &c.kind) == Some(&RtKind::Key) {
            if let Some(idx) = self.door_at(foot).or_else(|| self.door_at(head)) {
                self.annihilate_door(idx);
                self.player.carrying = None;
            }
        }
        if self.blocks_player(foot) || self.blocks_player(head) {
            return Err(RuleError::Blocked);
        }
        self.player.foot = foot;
        sweep.push(foot);
        sweep.push(head);
        self.fall_player(sweep)
    }

    fn jump(&mut self, drift: i32, sweep: &mut Vec<Cell>) -> Result<(), RuleError> {
        if drift.abs() > MAX_DRIFT {
            return Err(RuleError::BadDrift);
        }
        let full_rise = if self.player.carrying.is_some() {
            JUMP_RISE_CARRYING
        } else {
            JUMP_RISE_FREE
        };
        // Rise, truncated when the head would enter a blocking cell.
        let mut rise = 0;
        for h in 1..=full_rise {
            let new_head = self.player.foot.shifted(0, -h - 1);
            if self.blocks_rise(new_head) {
                break;
            }
            rise = h;
        }
        // The body may pass through ledges on the way up but may not come to
        // rest inside one.
        while rise > 0 {
            let foot = self.player.foot.shifted(0, -rise);
            if self.grid().at(foot) == Tile::Ledge || self.grid().at(foot.above()) == Tile::Ledge
            {
                rise -= 1;
            } else {
                break;
            }
        }
        self.player.foot = self.player.foot.shifted(0, -rise);
        sweep.push(self.player.foot);
        sweep.push(self.player.head());
        // Drift at the apex, stopped by any obstruction.
        if drift != 0 {
            let dir = if drift < 0 { Dir::Left } else { Dir::Right };
            self.player.facing = dir;
            for _ in 0..drift.abs() {
                let foot = self.player.foot.shifted(dir.dx(), 0);
                if self.blocks_player(foot) || self.blocks_player(foot.above()) {
                    break;
                }
                self.player.foot = foot;
                sweep.push(foot);
                sweep.push(foot.above());
            }
        }
        self.fall_player(sweep)
    }

    /// Grab candidates: adjacent column at foot or head height, or the top
    /// of an adjacent stack one row below the foot. Facing side first.
    fn grab(&mut self) -> Result<(), RuleError> {
        if self.player.carrying.is_some() {
            return Err(RuleError::HandsFull);
        }
        let sides = [self.player.facing.dx(), -self.player.facing.dx()];
        for dx in sides {
            let col = self.player.foot.col + dx;
            let candidates = [
                Cell::new(col, self.player.foot.row),
                Cell::new(col, self.player.head().row),
                Cell::new(col, self.player.foot.row + 1),
            ];
            for (i, cell) in candidates.iter().enumerate() {
                let reach_down = i == 2;
                let found = self.current.objects.iter().position(|o| {
                    o.pos == *cell
                        && o.kind.is_carryable()
                        && (!reach_down || self.is_stack_top(o))
                        && self.grabbable(o)
                });
                if let Some(idx) = found {
                    let obj = self.current.objects.remove(idx);
                    self.player.carrying = Some(obj);
                    return Ok(());
                }
            }
        }
        Err(RuleError::NothingToGrab)
    }

    fn is_stack_top(&self, obj: &PlacedObject) -> bool {
        !self
            .current
            .objects
            .iter()
            .any(|o| o.kind == RtKind::Block && o.pos == obj.pos.above())
    }

    fn grabbable(&self, obj: &PlacedObject) -> bool {
        // A block buried under another block cannot be pulled out.
        if obj.kind == RtKind::Block {
            self.is_stack_top(obj)
        } else {
            true
        }
    }

    /// Drop into the facing-adjacent cell at head height, then gravity.
    fn drop_carried(&mut self) -> Result<(), RuleError> {
        let Some(obj) = self.player.carrying.clone() else {
            return Err(RuleError::NothingCarried);
        };
        let target = Cell::new(
            self.player.head().col + self.player.facing.dx(),
            self.player.head().row,
        );
        if !self.grid().in_bounds(target)
            || self.grid().at(target) == Tile::Solid
            || self.door_at(target).is_some()
            || self.block_at(target)
        {
            return Err(RuleError::DropBlocked);
        }
        self.player.carrying = None;
        self.place_falling_object(obj, target);
        Ok(())
    }

    /// Throws the carried object. Horizontal flight runs at head height
    /// until a solid tile or closed door; a thrown key annihilates the first
    /// door its flight or fall touches.
    fn throw(&mut self, dir: ThrowDir) -> Result<(), RuleError> {
        let Some(obj) = self.player.carrying.clone() else {
            return Err(RuleError::NothingCarried);
        };
        self.player.carrying = None;
        let start = self.player.head();
        match dir {
            ThrowDir::Left | ThrowDir::Right => {
                let dx = if dir == ThrowDir::Left { -1 } else { 1 };
                self.player.facing = if dx < 0 { Dir::Left } else { Dir::Right };
                let mut cur = start;
                loop {
                    let nxt = cur.shifted(dx, 0);
                    if self.grid().at(nxt) == Tile::Solid {
                        break;
                    }
                    if let Some(door_idx) = self.door_at(nxt) {
                        if obj.kind == RtKind::Key {
                            self.annihilate_door(door_idx);
                            return Ok(());
                        }
                        break;
                    }
                    cur = nxt;
                }
                self.place_falling_object(obj, cur);
            }
            ThrowDir::Up => {
                let mut cur = start;
                for _ in 0..THROW_UP_RISE {
                    let nxt = cur.above();
                    if self.grid().at(nxt) == Tile::Solid {
                        break;
                    }
                    if let Some(door_idx) = self.door_at(nxt) {
                        if obj.kind == RtKind::Key {
                            self.annihilate_door(door_idx);
                            return Ok(());
                        }
                        break;
                    }
                    cur = nxt;
                }
                self.place_falling_object(obj, cur);
            }
        }
        Ok(())
    }

    /// Lets an object fall from `from`, resting on solid, a closed door, or
    /// a block; keys annihilate doors they fall onto; objects leaving the
    /// bottom edge are lost.
    fn place_falling_object(&mut self, mut obj: PlacedObject, from: Cell) {
        let mut cur = from;
        // A flight can end inside the top cell of a block stack; the object
        // comes to rest on top of it.
        while self.block_at(cur) {
            cur = cur.above();
        }
        loop {
            let below = cur.below();
            if below.row as usize >= self.grid().height() {
                // Lost off the bottom of the screen.
                return;
            }
            if self.grid().at(below) == Tile::Solid {
                break;
            }
            if let Some(door_idx) = self.door_at(below) {
                if obj.kind == RtKind::Key {
                    self.annihilate_door(door_idx);
                    return;
                }
                break;
            }
            if self.block_at(below) {
                break;
            }
            cur = below;
        }
        obj.pos = cur;
        self.current.objects.push(obj);
    }

    fn settle_all_objects(&mut self) {
        let spec = self.spec();
        let grid = spec.tiles.clone();
        let mut glow_updates = BTreeMap::new();
        settle_objects(&grid, &mut self.current.objects, &mut glow_updates);
    }

    /// Enter the chest or jar under the player's feet.
    fn enter(&mut self, sweep: &mut Vec<Cell>) -> Result<(), RuleError> {
        let foot = self.player.foot;
        let entry_idx = self
            .current
            .objects
            .iter()
            .position(|o| o.pos == foot && matches!(o.kind, RtKind::Chest { .. }))
            .or_else(|| {
                self.current
                    .objects
                    .iter()
                    .position(|o| o.pos == foot && matches!(o.kind, RtKind::Jar(_)))
            })
            .ok_or(RuleError::NothingToEnter)?;
        let obj = self.current.objects[entry_idx].clone();
        match &obj.kind {
            RtKind::Chest { target } => {
                let target = target.clone();
                let new_room = self.instantiate(&target);
                let spec_entry = self
                    .level
                    .rooms
                    .get(&target)
                    .expect("chest target exists")
                    .entry;
                let old_room = std::mem::replace(&mut self.current, new_room);
                self.stack.push(Arc::new(Frame {
                    room: old_room,
                    player_return: foot,
                    player_facing: self.player.facing,
                    via: Via::Chest { object: obj.id },
                }));
                self.player.foot = spec_entry;
                sweep.push(self.player.foot);
                sweep.push(self.player.head());
                self.fall_player(sweep)
            }
            RtKind::Jar(jar) => {
                let jar = jar.clone();
                let mut new_room = jar.snapshot.clone();
                self.overlay_glow(&mut new_room);
                let old_room = std::mem::replace(&mut self.current, new_room);
                self.stack.push(Arc::new(Frame {
                    room: old_room,
                    player_return: foot,
                    player_facing: self.player.facing,
                    via: Via::Jar { object: obj.id },
                }));
                self.player.foot = jar.resume_at;
                sweep.push(self.player.foot);
                sweep.push(self.player.head());
                self.fall_player(sweep)
            }
            _ => unreachable!(),
        }
    }

    /// Pop via the pink flame at the room's entry point.
    fn exit_pink(&mut self, sweep: &mut Vec<Cell>) -> Result<(), RuleError> {
        if self.stack.is_empty() {
            return Err(RuleError::AtStackBottom);
        }
        if self.player.foot != self.spec().entry {
            return Err(RuleError::NoPinkFlame);
        }
        self.pop_frame(sweep)
    }

    /// Pop via the green flame, bottling the room into a fresh jar.
    fn exit_green(&mut self, sweep: &mut Vec<Cell>) -> Result<(), RuleError> {
        if self.stack.is_empty() {
            return Err(RuleError::AtStackBottom);
        }
        if self.player.carrying.is_some() {
            return Err(RuleError::CarryingAtGreenFlame);
        }
        let flame = self
            .spec()
            .green_flame
            .filter(|_| self.current.green_flame_present)
            .ok_or(RuleError::NoGreenFlame)?;
        if self.player.foot != flame {
            return Err(RuleError::NoGreenFlame);
        }
        let mut snapshot = self.current.clone();
        snapshot.green_flame_present = false;
        self.jar_counter += 1;
        let jar = PlacedObject {
            id: format!("jar#{}", self.jar_counter),
            kind: RtKind::Jar(Arc::new(JarValue {
                snapshot,
                resume_at: flame,
            })),
            pos: Cell::new(0, 0),
            glow: false,
        };
        self.pop_frame(sweep)?;
        self.player.carrying = Some(jar);
        Ok(())
    }

    fn pop_frame(&mut self, sweep: &mut Vec<Cell>) -> Result<(), RuleError> {
        let frame = self.stack.pop().expect("stack checked nonempty");
        let frame = Arc::try_unwrap(frame).unwrap_or_else(|arc| (*arc).clone());
        let mut room = frame.room;
        // The parent returns bit-for-bit except glow-backed objects, and a
        // jar used to enter is destroyed.
        if let Via::Jar { object } = &frame.via {
            room.objects.retain(|o| o.id != *object);
        }
        self.overlay_glow(&mut room);
        self.current = room;
        self.player.foot = frame.player_return;
        self.player.facing = frame.player_facing;
        sweep.push(self.player.foot);
        sweep.push(self.player.head());
        self.fall_player(sweep)
    }

    /// Replays a primitive trace from this state.
    pub fn replay(&self, trace: &[Action]) -> Result<GameState, RuleError> {
        let mut state = self.clone();
        for &a in trace {
            state = state.apply(a)?;
        }
        Ok(state)
    }

    /// Stack depth including the live room.
    pub fn depth(&self) -> usize {
        self.stack.len() + 1
    }

    /// Structural hash identifying this state up to object ordering and
    /// synthetic jar ids. Deterministic within a process run.
    pub fn canonical_hash(&self) -> u64 {
        let mut h = Fnv::new();
        for frame in &self.stack {
            hash_room(&frame.room, &mut h);
            frame.player_return.hash(&mut h);
            match &frame.via {
                Via::Chest { .. } => 1u8.hash(&mut h),
                Via::Jar { .. } => 2u8.hash(&mut h),
            }
        }
        0xffu8.hash(&mut h);
        hash_room(&self.current, &mut h);
        self.player.foot.hash(&mut h);
        self.player.facing.hash(&mut h);
        match &self.player.carrying {
            None => 0u8.hash(&mut h),
            Some(obj) => {
                1u8.hash(&mut h);
                hash_kind(&obj.kind, &mut h);
            }
        }
        for (id, gs) in &self.glow {
            id.hash(&mut h);
            gs.hash(&mut h);
        }
        self.won.hash(&mut h);
        h.finish()
    }
}

/// Gravity fixpoint for loose objects: bottom-most settle first so stacks
/// rest on their support. Objects ignore ledges; keys never annihilate
/// doors while merely settling in place.
fn settle_objects(
    grid: &Grid,
    objects: &mut Vec<PlacedObject>,
    _glow_updates: &mut BTreeMap<ObjectId, Cell>,
) {
    // Sort order: deepest rows first so supports are final before the
    // objects above them settle.
    let mut order: Vec<usize> = (0..objects.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(objects[i].pos.row), objects[i].pos.col));
    let mut lost: Vec<usize> = Vec::new();
    for &i in &order {
        if matches!(objects[i].kind, RtKind::Door | RtKind::Crystal) {
            continue;
        }
        let mut cur = objects[i].pos;
        loop {
            let below = cur.below();
            if below.row as usize >= grid.height() {
                lost.push(i);
                break;
            }
            if grid.at(below) == Tile::Solid {
                break;
            }
            let blocked = objects.iter().enumerate().any(|(j, o)| {
                j != i
                    && ((o.kind == RtKind::Block && o.pos == below)
                        || (o.kind == RtKind::Door
                            && o.pos.col == below.col
                            && below.row <= o.pos.row
                            && below.row >= o.pos.row - 2))
            });
            if blocked {
                break;
            }
            cur = below;
        }
        objects[i].pos = cur;
    }
    if !lost.is_empty() {
        lost.sort_unstable();
        for &i in lost.iter().rev() {
            objects.remove(i);
        }
    }
}

fn hash_room(room: &RoomInstance, h: &mut Fnv) {
    room.spec_id.hash(h);
    room.green_flame_present.hash(h);
    let mut keys: Vec<(Cell, u64)> = room
        .objects
        .iter()
        .map(|o| {
            let mut oh = Fnv::new();
            hash_kind(&o.kind, &mut oh);
            (o.pos, oh.finish())
        })
        .collect();
    keys.sort_unstable();
    for (pos, kh) in keys {
        pos.hash(h);
        kh.hash(h);
    }
}

fn hash_kind(kind: &RtKind, h: &mut Fnv) {
    match kind {
        RtKind::Block => 1u8.hash(h),
        RtKind::Key => 2u8.hash(h),
        RtKind::Ring => 3u8.hash(h),
        RtKind::Chest { target } => {
            4u8.hash(h);
            target.hash(h);
        }
        RtKind::Crystal => 5u8.hash(h),
        RtKind::Door => 6u8.hash(h),
        RtKind::Jar(jar) => {
            7u8.hash(h);
            hash_room(&jar.snapshot, h);
            jar.resume_at.hash(h);
        }
    }
}

/// FNV-1a, fixed-key and deterministic across runs.
struct Fnv(u64);

impl Fnv {
    fn new() -> Fnv {
        Fnv(0xcbf29ce484222325)
    }
}

impl Hasher for Fnv {
    fn finish(&self) -> u64 {
        self.0
    }
    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
}
