//! The Toy domain: a deterministic object-oriented MDP where a gripper agent
//! moves on a grid, picks up toys, drops them into containers and carries
//! containers between rooms.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Cell = usize;

/// Default cap on enumerated states.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("{function} expects {expected} arguments, got {found}")]
    ArityMismatch {
        function: PropFn,
        expected: usize,
        found: usize,
    },
    #[error("{function} argument {position} must be a {expected}, got {found}")]
    SortMismatch {
        function: PropFn,
        position: usize,
        expected: Sort,
        found: String,
    },
    #[error("state space exceeds cap of {cap} states")]
    StateExplosion { cap: usize },
    #[error("cannot read world file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed world json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToySpec {
    pub id: String,
    /// Name used in proposition identifiers; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub shape: String,
    pub color: String,
    pub start: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: String,
    pub start: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub cells: BTreeSet<Cell>,
}

/// Static description of a Toy world. Cells are numbered row-major,
/// `index = y * grid_width + x`, with north being `y - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub grid_width: usize,
    pub grid_height: usize,
    #[serde(default)]
    pub toys: Vec<ToySpec>,
    #[serde(default)]
    pub containers: Vec<ContainerSpec>,
    #[serde(default)]
    pub rooms: Vec<RoomSpec>,
    pub agent_start: Cell,
    pub gamma: f64,
    /// Extra color values beyond those carried by toys.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub colors: Vec<String>,
    /// Extra shape values beyond those carried by toys.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shapes: Vec<String>,
}

/// Something a word or a proposition argument can refer to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Referent {
    Agent,
    Object(String),
    Room(String),
    Color(String),
    Shape(String),
    ContainerKind(String),
}

impl fmt::Display for Referent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Referent::Agent => write!(f, "agent"),
            Referent::Object(id) => write!(f, "object:{id}"),
            Referent::Room(id) => write!(f, "room:{id}"),
            Referent::Color(v) => write!(f, "color:{v}"),
            Referent::Shape(v) => write!(f, "shape:{v}"),
            Referent::ContainerKind(v) => write!(f, "kind:{v}"),
        }
    }
}

/// Argument sorts of propositional functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sort {
    Agent,
    Toy,
    Container,
    /// A toy or a container.
    Entity,
    Room,
    Color,
    Shape,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sort::Agent => "agent",
            Sort::Toy => "toy",
            Sort::Container => "container",
            Sort::Entity => "entity",
            Sort::Room => "room",
            Sort::Color => "color",
            Sort::Shape => "shape",
        };
        f.write_str(s)
    }
}

/// The built-in propositional functions of the Toy domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropFn {
    AgentAt,
    AgentAtObject,
    Holding,
    InContainer,
    ContainerInRoom,
    HasColor,
    HasShape,
}

impl PropFn {
    pub const ALL: [PropFn; 7] = [
        PropFn::AgentAt,
        PropFn::AgentAtObject,
        PropFn::Holding,
        PropFn::InContainer,
        PropFn::ContainerInRoom,
        PropFn::HasColor,
        PropFn::HasShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropFn::AgentAt => "agent_at",
            PropFn::AgentAtObject => "agent_at_object",
            PropFn::Holding => "holding",
            PropFn::InContainer => "in_container",
            PropFn::ContainerInRoom => "container_in_room",
            PropFn::HasColor => "has_color",
            PropFn::HasShape => "has_shape",
        }
    }

    pub fn from_name(name: &str) -> Option<PropFn> {
        PropFn::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn signature(self) -> &'static [Sort] {
        match self {
            PropFn::AgentAt => &[Sort::Room],
            PropFn::AgentAtObject => &[Sort::Entity],
            PropFn::Holding => &[Sort::Toy],
            PropFn::InContainer => &[Sort::Toy, Sort::Container],
            PropFn::ContainerInRoom => &[Sort::Container, Sort::Room],
            PropFn::HasColor => &[Sort::Toy, Sort::Color],
            PropFn::HasShape => &[Sort::Toy, Sort::Shape],
        }
    }

    pub fn arity(self) -> usize {
        self.signature().len()
    }

    /// Whether the function's value can change between states.
    pub fn is_fluent(self) -> bool {
        !matches!(self, PropFn::HasColor | PropFn::HasShape)
    }
}

impl fmt::Display for PropFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContainerLocation {
    Cell(Cell),
    HeldByAgent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyLocation {
    Cell(Cell),
    HeldByAgent,
    /// Index into `WorldConfig::containers`.
    InContainer(usize),
}

/// A full environment state. Locations are indexed like the world's
/// `containers` and `toys` lists.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ToyState {
    pub agent_cell: Cell,
    pub box_location: Vec<ContainerLocation>,
    pub toy_location: Vec<ToyLocation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Move(Direction),
    Pickup(String),
    PutDown,
    PlaceInContainer(String),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Move(d) => write!(f, "Move({})", d.name()),
            Action::Pickup(id) => write!(f, "Pickup({id})"),
            Action::PutDown => write!(f, "PutDown"),
            Action::PlaceInContainer(id) => write!(f, "PlaceInContainer({id})"),
        }
    }
}

/// Upper bound `N (N + 1) (N + 2)^k` on the number of states of a world with
/// `N` cells, one container and `k` toys: agent cell, container placement
/// (a cell or held) and per-toy placement (a cell, held or in the container).
pub fn state_bound(w: &WorldConfig) -> u128 {
    let n = w.cell_count() as u128;
    let toys = (n + 2).saturating_pow(w.toys.len() as u32);
    n.saturating_mul(n + 1).saturating_mul(toys)
}

impl WorldConfig {
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let w: WorldConfig = serde_json::from_str(text)?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("world config serializes")
    }

    pub fn cell_count(&self) -> usize {
        self.grid_width * self.grid_height
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::InvalidConfig(m));
        if self.grid_width == 0 || self.grid_height == 0 {
            return bad("grid dimensions must be positive".into());
        }
        let n = self.cell_count();
        if self.agent_start >= n {
            return bad(format!("agent_start {} outside grid", self.agent_start));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma {} not in (0, 1)", self.gamma));
        }
        let mut ids = HashSet::new();
        let all_ids = self
            .toys
            .iter()
            .map(|t| &t.id)
            .chain(self.containers.iter().map(|c| &c.id))
            .chain(self.rooms.iter().map(|r| &r.id));
        for id in all_ids {
            if id.is_empty() || !ids.insert(id) {
                return bad(format!("duplicate or empty id `{id}`"));
            }
        }
        let mut entity_names = HashSet::new();
        for t in &self.toys {
            if t.start >= n {
                return bad(format!("toy `{}` starts outside grid", t.id));
            }
            if !entity_names.insert(self.toy_name(t)) {
                return bad(format!("duplicate entity name `{}`", self.toy_name(t)));
            }
        }
        for c in &self.containers {
            if c.start >= n {
                return bad(format!("container `{}` starts outside grid", c.id));
            }
            if !entity_names.insert(c.name.as_deref().unwrap_or(&c.id)) {
                return bad(format!("duplicate entity name for `{}`", c.id));
            }
        }
        let mut room_names = HashSet::new();
        for r in &self.rooms {
            if r.cells.is_empty() {
                return bad(format!("room `{}` has no cells", r.id));
            }
            if r.cells.iter().any(|&c| c >= n) {
                return bad(format!("room `{}` has cells outside grid", r.id));
            }
            if !room_names.insert(r.name.as_deref().unwrap_or(&r.id)) {
                return bad(format!("duplicate room name for `{}`", r.id));
            }
        }
        Ok(())
    }

    fn toy_name<'a>(&self, t: &'a ToySpec) -> &'a str {
        t.name.as_deref().unwrap_or(&t.id)
    }

    pub fn toy_index(&self, id: &str) -> Option<usize> {
        self.toys.iter().position(|t| t.id == id)
    }

    pub fn container_index(&self, id: &str) -> Option<usize> {
        self.containers.iter().position(|c| c.id == id)
    }

    pub fn room(&self, id: &str) -> Option<&RoomSpec> {
        self.rooms.iter().find(|r| r.id == id)
    }

    /// All color values known to the world.
    pub fn color_values(&self) -> BTreeSet<String> {
        self.toys
            .iter()
            .map(|t| t.color.clone())
            .chain(self.colors.iter().cloned())
            .collect()
    }

    pub fn shape_values(&self) -> BTreeSet<String> {
        self.toys
            .iter()
            .map(|t| t.shape.clone())
            .chain(self.shapes.iter().cloned())
            .collect()
    }

    /// Name used for `r` inside proposition identifiers.
    pub fn name_of(&self, r: &Referent) -> Option<String> {
        match r {
            Referent::Agent => Some("agent".to_string()),
            Referent::Object(id) => {
                if let Some(t) = self.toys.iter().find(|t| &t.id == id) {
                    Some(self.toy_name(t).to_string())
                } else {
                    self.containers
                        .iter()
                        .find(|c| &c.id == id)
                        .map(|c| c.name.clone().unwrap_or_else(|| c.id.clone()))
                }
            }
            Referent::Room(id) => self
                .room(id)
                .map(|r| r.name.clone().unwrap_or_else(|| r.id.clone())),
            Referent::Color(v) => self.color_values().contains(v).then(|| v.clone()),
            Referent::Shape(v) => self.shape_values().contains(v).then(|| v.clone()),
            Referent::ContainerKind(v) => self
                .containers
                .iter()
                .any(|c| &c.kind == v)
                .then(|| v.clone()),
        }
    }

    /// Whether the referent exists in this world.
    pub fn contains(&self, r: &Referent) -> bool {
        self.name_of(r).is_some()
    }

    pub fn has_sort(&self, r: &Referent, sort: Sort) -> bool {
        match (sort, r) {
            (Sort::Agent, Referent::Agent) => true,
            (Sort::Toy, Referent::Object(id)) => self.toy_index(id).is_some(),
            (Sort::Container, Referent::Object(id)) => self.container_index(id).is_some(),
            (Sort::Entity, Referent::Object(id)) => {
                self.toy_index(id).is_some() || self.container_index(id).is_some()
            }
            (Sort::Room, Referent::Room(id)) => self.room(id).is_some(),
            (Sort::Color, Referent::Color(v)) => self.color_values().contains(v),
            (Sort::Shape, Referent::Shape(v)) => self.shape_values().contains(v),
            _ => false,
        }
    }

    /// Every referent of the given sort, in configuration order.
    pub fn domain(&self, sort: Sort) -> Vec<Referent> {
        let toys = || self.toys.iter().map(|t| Referent::Object(t.id.clone()));
        let containers = || {
            self.containers
                .iter()
                .map(|c| Referent::Object(c.id.clone()))
        };
        match sort {
            Sort::Agent => vec![Referent::Agent],
            Sort::Toy => toys().collect(),
            Sort::Container => containers().collect(),
            Sort::Entity => toys().chain(containers()).collect(),
            Sort::Room => self
                .rooms
                .iter()
                .map(|r| Referent::Room(r.id.clone()))
                .collect(),
            Sort::Color => self
                .color_values()
                .into_iter()
                .map(Referent::Color)
                .collect(),
            Sort::Shape => self
                .shape_values()
                .into_iter()
                .map(Referent::Shape)
                .collect(),
        }
    }

    pub fn initial_state(&self) -> ToyState {
        ToyState {
            agent_cell: self.agent_start,
            box_location: self
                .containers
                .iter()
                .map(|c| ContainerLocation::Cell(c.start))
                .collect(),
            toy_location: self
                .toys
                .iter()
                .map(|t| ToyLocation::Cell(t.start))
                .collect(),
        }
    }

    /// Checks the state's shape and invariants against this world.
    pub fn check_state(&self, s: &ToyState) -> Result<(), WorldError> {
        let bad = |m: String| Err(WorldError::InvalidState(m));
        let n = self.cell_count();
        if s.agent_cell >= n {
            return bad(format!("agent cell {} outside grid", s.agent_cell));
        }
        if s.box_location.len() != self.containers.len() || s.toy_location.len() != self.toys.len()
        {
            return bad("entity count does not match world".into());
        }
        let mut held = 0;
        for loc in &s.box_location {
            match *loc {
                ContainerLocation::Cell(c) if c >= n => {
                    return bad(format!("cell {c} outside grid"))
                }
                ContainerLocation::HeldByAgent => held += 1,
                _ => {}
            }
        }
        for loc in &s.toy_location {
            match *loc {
                ToyLocation::Cell(c) if c >= n => return bad(format!("cell {c} outside grid")),
                ToyLocation::InContainer(k) if k >= self.containers.len() => {
                    return bad(format!("container index {k} out of range"))
                }
                ToyLocation::HeldByAgent => held += 1,
                _ => {}
            }
        }
        if held > 1 {
            return bad("more than one entity held".into());
        }
        Ok(())
    }

    fn container_cell(&self, s: &ToyState, k: usize) -> Cell {
        match s.box_location[k] {
            ContainerLocation::Cell(c) => c,
            ContainerLocation::HeldByAgent => s.agent_cell,
        }
    }

    fn toy_cell(&self, s: &ToyState, t: usize) -> Cell {
        match s.toy_location[t] {
            ToyLocation::Cell(c) => c,
            ToyLocation::HeldByAgent => s.agent_cell,
            ToyLocation::InContainer(k) => self.container_cell(s, k),
        }
    }

    /// Effective cell of a toy or container.
    pub fn entity_cell(&self, s: &ToyState, id: &str) -> Option<Cell> {
        if let Some(t) = self.toy_index(id) {
            Some(self.toy_cell(s, t))
        } else {
            self.container_index(id).map(|k| self.container_cell(s, k))
        }
    }

    /// Id of the entity currently in the gripper.
    pub fn held_entity<'a>(&'a self, s: &ToyState) -> Option<&'a str> {
        if let Some(t) = s
            .toy_location
            .iter()
            .position(|l| *l == ToyLocation::HeldByAgent)
        {
            return Some(&self.toys[t].id);
        }
        s.box_location
            .iter()
            .position(|l| *l == ContainerLocation::HeldByAgent)
            .map(|k| self.containers[k].id.as_str())
    }

    fn step_cell(&self, cell: Cell, dir: Direction) -> Cell {
        let (x, y) = (cell % self.grid_width, cell / self.grid_width);
        match dir {
            Direction::North if y > 0 => cell - self.grid_width,
            Direction::South if y + 1 < self.grid_height => cell + self.grid_width,
            Direction::East if x + 1 < self.grid_width => cell + 1,
            Direction::West if x > 0 => cell - 1,
            _ => cell,
        }
    }
}

/// Deterministic successor. Actions whose preconditions fail leave the
/// state unchanged.
pub fn transition(w: &WorldConfig, s: &ToyState, a: &Action) -> Result<ToyState, WorldError> {
    w.check_state(s)?;
    let mut next = s.clone();
    let holding = w.held_entity(s).is_some();
    match a {
        Action::Move(dir) => next.agent_cell = w.step_cell(s.agent_cell, *dir),
        Action::Pickup(id) => {
            if let Some(t) = w.toy_index(id) {
                if !holding
                    && matches!(s.toy_location[t], ToyLocation::Cell(c) if c == s.agent_cell)
                {
                    next.toy_location[t] = ToyLocation::HeldByAgent;
                }
            } else if let Some(k) = w.container_index(id) {
                if !holding
                    && matches!(s.box_location[k], ContainerLocation::Cell(c) if c == s.agent_cell)
                {
                    next.box_location[k] = ContainerLocation::HeldByAgent;
                }
            } else {
                return Err(WorldError::UnknownEntity(id.clone()));
            }
        }
        Action::PutDown => {
            for loc in next.toy_location.iter_mut() {
                if *loc == ToyLocation::HeldByAgent {
                    *loc = ToyLocation::Cell(s.agent_cell);
                }
            }
            for loc in next.box_location.iter_mut() {
                if *loc == ContainerLocation::HeldByAgent {
                    *loc = ContainerLocation::Cell(s.agent_cell);
                }
            }
        }
        Action::PlaceInContainer(id) => {
            let k = w
                .container_index(id)
                .ok_or_else(|| WorldError::UnknownEntity(id.clone()))?;
            let held_toy = s
                .toy_location
                .iter()
                .position(|l| *l == ToyLocation::HeldByAgent);
            if let Some(t) = held_toy {
                if matches!(s.box_location[k], ContainerLocation::Cell(c) if c == s.agent_cell) {
                    next.toy_location[t] = ToyLocation::InContainer(k);
                }
            }
        }
    }
    Ok(next)
}

/// Actions worth considering in `s`: the four moves, then pickups of
/// co-located free entities by id, then `PutDown`, then placements into
/// co-located containers by id.
pub fn available_actions(w: &WorldConfig, s: &ToyState) -> Vec<Action> {
    let mut actions: Vec<Action> = Direction::ALL.into_iter().map(Action::Move).collect();
    let held = w.held_entity(s);
    if held.is_none() {
        let mut ids: Vec<&str> = Vec::new();
        for (t, toy) in w.toys.iter().enumerate() {
            if s.toy_location[t] == ToyLocation::Cell(s.agent_cell) {
                ids.push(&toy.id);
            }
        }
        for (k, c) in w.containers.iter().enumerate() {
            if s.box_location[k] == ContainerLocation::Cell(s.agent_cell) {
                ids.push(&c.id);
            }
        }
        ids.sort_unstable();
        actions.extend(ids.into_iter().map(|id| Action::Pickup(id.to_string())));
    } else {
        actions.push(Action::PutDown);
        let holds_toy = s.toy_location.contains(&ToyLocation::HeldByAgent);
        if holds_toy {
            let mut ids: Vec<&str> = w
                .containers
                .iter()
                .enumerate()
                .filter(|(k, _)| s.box_location[*k] == ContainerLocation::Cell(s.agent_cell))
                .map(|(_, c)| c.id.as_str())
                .collect();
            ids.sort_unstable();
            actions.extend(
                ids.into_iter()
                    .map(|id| Action::PlaceInContainer(id.to_string())),
            );
        }
    }
    actions
}

/// Breadth-first closure of `s0`, in discovery order.
pub fn reachable_states(
    w: &WorldConfig,
    s0: &ToyState,
    cap: usize,
) -> Result<Vec<ToyState>, WorldError> {
    w.check_state(s0)?;
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(s0.clone());
    queue.push_back(s0.clone());
    while let Some(s) = queue.pop_front() {
        order.push(s.clone());
        for a in available_actions(w, &s) {
            let next = transition(w, &s, &a)?;
            if seen.insert(next.clone()) {
                if seen.len() > cap {
                    return Err(WorldError::StateExplosion { cap });
                }
                queue.push_back(next);
            }
        }
    }
    Ok(order)
}

/// Evaluates a propositional function on well-sorted arguments.
pub fn eval_prop(
    w: &WorldConfig,
    function: PropFn,
    args: &[Referent],
    s: &ToyState,
) -> Result<bool, WorldError> {
    let sig = function.signature();
    if args.len() != sig.len() {
        return Err(WorldError::ArityMismatch {
            function,
            expected: sig.len(),
            found: args.len(),
        });
    }
    for (position, (arg, sort)) in args.iter().zip(sig).enumerate() {
        if !w.has_sort(arg, *sort) {
            return Err(WorldError::SortMismatch {
                function,
                position,
                expected: *sort,
                found: arg.to_string(),
            });
        }
    }
    let object = |i: usize| match &args[i] {
        Referent::Object(id) => id.as_str(),
        _ => unreachable!("sort checked"),
    };
    let value = |i: usize| match &args[i] {
        Referent::Room(v) | Referent::Color(v) | Referent::Shape(v) => v.as_str(),
        _ => unreachable!("sort checked"),
    };
    Ok(match function {
        PropFn::AgentAt => w
            .room(value(0))
            .is_some_and(|r| r.cells.contains(&s.agent_cell)),
        PropFn::AgentAtObject => w.entity_cell(s, object(0)) == Some(s.agent_cell),
        PropFn::Holding => {
            let t = w.toy_index(object(0)).expect("sort checked");
            s.toy_location[t] == ToyLocation::HeldByAgent
        }
        PropFn::InContainer => {
            let t = w.toy_index(object(0)).expect("sort checked");
            let k = w.container_index(object(1)).expect("sort checked");
            s.toy_location[t] == ToyLocation::InContainer(k)
        }
        PropFn::ContainerInRoom => {
            let k = w.container_index(object(0)).expect("sort checked");
            let cell = w.container_cell(s, k);
            w.room(value(1)).is_some_and(|r| r.cells.contains(&cell))
        }
        PropFn::HasColor => {
            let t = w.toy_index(object(0)).expect("sort checked");
            w.toys[t].color == value(1)
        }
        PropFn::HasShape => {
            let t = w.toy_index(object(0)).expect("sort checked");
            w.toys[t].shape == value(1)
        }
    })
}

/// Compact, deterministic rendering of a state.
pub fn state_digest(w: &WorldConfig, s: &ToyState) -> String {
    let mut parts = vec![format!("agent={}", s.agent_cell)];
    for (k, c) in w.containers.iter().enumerate() {
        let loc = match s.box_location[k] {
            ContainerLocation::Cell(cell) => cell.to_string(),
            ContainerLocation::HeldByAgent => "held".to_string(),
        };
        parts.push(format!("{}={loc}", c.id));
    }
    for (t, toy) in w.toys.iter().enumerate() {
        let loc = match s.toy_location[t] {
            ToyLocation::Cell(cell) => cell.to_string(),
            ToyLocation::HeldByAgent => "held".to_string(),
            ToyLocation::InContainer(k) => format!("in:{}", w.containers[k].id),
        };
        parts.push(format!("{}={loc}", toy.id));
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_world(width: usize) -> WorldConfig {
        WorldConfig {
            grid_width: width,
            grid_height: 1,
            toys: vec![],
            containers: vec![],
            rooms: vec![],
            agent_start: 0,
            gamma: 0.95,
            colors: vec![],
            shapes: vec![],
        }
    }

    fn toy(id: &str, shape: &str, color: &str, start: Cell) -> ToySpec {
        ToySpec {
            id: id.into(),
            name: Some(shape.into()),
            shape: shape.into(),
            color: color.into(),
            start,
        }
    }

    fn boxed(id: &str, start: Cell) -> ContainerSpec {
        ContainerSpec {
            id: id.into(),
            name: Some("box".into()),
            kind: "box".into(),
            start,
        }
    }

    #[test]
    fn move_east_and_boundary() {
        let w = line_world(4);
        let s = w.initial_state();
        let east = Action::Move(Direction::East);
        assert_eq!(transition(&w, &s, &east).unwrap().agent_cell, 1);
        let edge = ToyState {
            agent_cell: 3,
            ..s.clone()
        };
        assert_eq!(transition(&w, &edge, &east).unwrap(), edge);
        let north = Action::Move(Direction::North);
        assert_eq!(transition(&w, &s, &north).unwrap(), s);
    }

    #[test]
    fn pickup_co_located_toy() {
        let mut w = line_world(4);
        w.toys.push(toy("toy_sphere", "sphere", "red", 3));
        w.agent_start = 3;
        let s = w.initial_state();
        let next = transition(&w, &s, &Action::Pickup("toy_sphere".into())).unwrap();
        assert_eq!(next.toy_location[0], ToyLocation::HeldByAgent);
        assert!(eval_prop(
            &w,
            PropFn::Holding,
            &[Referent::Object("toy_sphere".into())],
            &next
        )
        .unwrap());
    }

    #[test]
    fn failed_pickup_self_loops() {
        let mut w = line_world(4);
        w.toys.push(toy("toy_sphere", "sphere", "red", 3));
        let s = w.initial_state();
        assert_eq!(
            transition(&w, &s, &Action::Pickup("toy_sphere".into())).unwrap(),
            s
        );
        assert!(matches!(
            transition(&w, &s, &Action::Pickup("ghost".into())),
            Err(WorldError::UnknownEntity(_))
        ));
    }

    #[test]
    fn toys_in_containers_ride_along() {
        let mut w = line_world(3);
        w.toys.push(toy("toy_cylinder", "cylinder", "blue", 0));
        w.containers.push(boxed("container_box", 0));
        let mut s = w.initial_state();
        for a in [
            Action::Pickup("toy_cylinder".into()),
            Action::PlaceInContainer("container_box".into()),
            Action::Pickup("container_box".into()),
            Action::Move(Direction::East),
            Action::Move(Direction::East),
        ] {
            s = transition(&w, &s, &a).unwrap();
        }
        assert_eq!(s.toy_location[0], ToyLocation::InContainer(0));
        assert_eq!(w.entity_cell(&s, "toy_cylinder"), Some(2));
        // a toy inside a container cannot be grabbed directly
        s = transition(&w, &s, &Action::PutDown).unwrap();
        assert_eq!(
            transition(&w, &s, &Action::Pickup("toy_cylinder".into())).unwrap(),
            s
        );
    }

    #[test]
    fn invalid_state_rejected() {
        let mut w = line_world(2);
        w.toys.push(toy("a", "ball", "red", 0));
        w.containers.push(boxed("c", 0));
        let s = ToyState {
            agent_cell: 0,
            box_location: vec![ContainerLocation::HeldByAgent],
            toy_location: vec![ToyLocation::HeldByAgent],
        };
        assert!(matches!(
            transition(&w, &s, &Action::PutDown),
            Err(WorldError::InvalidState(_))
        ));
        let s = ToyState {
            agent_cell: 9,
            box_location: vec![ContainerLocation::Cell(0)],
            toy_location: vec![ToyLocation::Cell(0)],
        };
        assert!(w.check_state(&s).is_err());
    }

    #[test]
    fn available_actions_examples() {
        let mut w = line_world(3);
        w.grid_height = 3;
        w.agent_start = 4;
        let s = w.initial_state();
        let moves: Vec<Action> = Direction::ALL.into_iter().map(Action::Move).collect();
        assert_eq!(available_actions(&w, &s), moves);

        w.toys.push(toy("toy_sphere", "sphere", "red", 4));
        let s = w.initial_state();
        let mut expected = moves.clone();
        expected.push(Action::Pickup("toy_sphere".into()));
        assert_eq!(available_actions(&w, &s), expected);

        w.toys.push(toy("toy_cylinder", "cylinder", "green", 4));
        w.containers.push(boxed("container_box", 4));
        let mut s = w.initial_state();
        s.toy_location[1] = ToyLocation::HeldByAgent;
        let mut expected = moves;
        expected.push(Action::PutDown);
        expected.push(Action::PlaceInContainer("container_box".into()));
        assert_eq!(available_actions(&w, &s), expected);
    }

    #[test]
    fn state_bound_examples() {
        let mut w = line_world(4);
        w.toys.push(toy("a", "ball", "red", 0));
        assert_eq!(state_bound(&w), 120);
        w.toys.push(toy("b", "cube", "red", 0));
        assert_eq!(state_bound(&w), 720);
        assert_eq!(state_bound(&line_world(1)), 2);
    }

    #[test]
    fn reachable_trivial_world() {
        let w = line_world(1);
        let s0 = w.initial_state();
        assert_eq!(
            reachable_states(&w, &s0, DEFAULT_STATE_CAP).unwrap(),
            vec![s0]
        );
    }

    #[test]
    fn reachable_matches_hand_enumeration() {
        let mut w = line_world(2);
        w.toys.push(toy("a", "ball", "red", 0));
        let s0 = w.initial_state();
        let got: BTreeSet<ToyState> = reachable_states(&w, &s0, DEFAULT_STATE_CAP)
            .unwrap()
            .into_iter()
            .collect();
        // agent in {0,1} × toy in {cell 0, cell 1, held}
        let mut expected = BTreeSet::new();
        for agent in 0..2 {
            for loc in [
                ToyLocation::Cell(0),
                ToyLocation::Cell(1),
                ToyLocation::HeldByAgent,
            ] {
                expected.insert(ToyState {
                    agent_cell: agent,
                    box_location: vec![],
                    toy_location: vec![loc],
                });
            }
        }
        assert_eq!(got, expected);
    }

    #[test]
    fn state_explosion_cap() {
        let w = line_world(5);
        let s0 = w.initial_state();
        assert!(matches!(
            reachable_states(&w, &s0, 3),
            Err(WorldError::StateExplosion { cap: 3 })
        ));
    }

    #[test]
    fn eval_prop_errors() {
        let mut w = line_world(2);
        w.toys.push(toy("a", "ball", "red", 0));
        w.containers.push(boxed("c", 1));
        let s = w.initial_state();
        assert!(matches!(
            eval_prop(&w, PropFn::Holding, &[], &s),
            Err(WorldError::ArityMismatch {
                expected: 1,
                found: 0,
                ..
            })
        ));
        assert!(matches!(
            eval_prop(&w, PropFn::Holding, &[Referent::Object("c".into())], &s),
            Err(WorldError::SortMismatch {
                position: 0,
                expected: Sort::Toy,
                ..
            })
        ));
        let args = [Referent::Object("a".into()), Referent::Object("c".into())];
        assert!(!eval_prop(&w, PropFn::InContainer, &args, &s).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut w = line_world(2);
        w.gamma = 1.0;
        assert!(w.validate().is_err());
        let mut w = line_world(2);
        w.toys.push(toy("a", "ball", "red", 5));
        assert!(w.validate().is_err());
        let mut w = line_world(2);
        w.rooms.push(RoomSpec {
            id: "r".into(),
            name: None,
            cells: BTreeSet::new(),
        });
        assert!(w.validate().is_err());
        let mut w = line_world(2);
        w.toys.push(toy("a", "ball", "red", 0));
        w.containers.push(ContainerSpec {
            id: "a".into(),
            name: None,
            kind: "box".into(),
            start: 0,
        });
        assert!(w.validate().is_err());
    }

    #[test]
    fn json_field_names() {
        let mut w = line_world(2);
        w.toys.push(toy("a", "ball", "red", 0));
        let v: serde_json::Value = serde_json::from_str(&w.to_json_pretty()).unwrap();
        for key in [
            "grid_width",
            "grid_height",
            "toys",
            "containers",
            "rooms",
            "agent_start",
            "gamma",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(WorldConfig::from_json(&w.to_json_pretty()).unwrap(), w);
    }
}
