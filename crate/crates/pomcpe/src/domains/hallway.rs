//! The Long Hallway benchmark.
//!
//! Two geometrically identical hallways with the star and trap arms swapped.
//! Per hallway, south to north: start room `a`, `k2` corridor rooms, then a
//! junction row holding a dead-end arm `c` to the west of junction `d` and
//! the side corridor `e`, `f` to the east (the dead end `f` is the signal
//! room), then `k1` corridor rooms, room `h`, and the top junction `t` whose
//! west/east arms are the star and the trap. The signal room reveals which
//! hallway the agent is in; nothing else distinguishes the two. Movement and
//! observations are fully deterministic.
//!
//! The shape makes the optimal episode from the start in room `a`
//! `k1 + k2 + 11` actions long (all `-1` then the final `+100`), and the
//! shortest path from facing the hallway in `f` to a star `7 + k1` actions.

use rand::RngCore;
use thiserror::Error;

use crate::model::{PomdpModel, Step};

pub const ACT_WAIT: usize = 0;
pub const ACT_FORWARD: usize = 1;
pub const ACT_BACKWARD: usize = 2;
pub const ACT_TURN_LEFT: usize = 3;
pub const ACT_TURN_RIGHT: usize = 4;
pub const NUM_ACTIONS: usize = 5;

/// Wall bits in the four egocentric directions times {none, left, right}
/// signals: 2·2·2·2·3.
pub const NUM_OBSERVATIONS: usize = 48;

pub const REWARD_STAR: f64 = 100.0;
pub const REWARD_TRAP: f64 = -100.0;
pub const REWARD_STEP: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoomKind {
    Ordinary,
    Junction,
    Signal,
    Star,
    Trap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Orientation {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [
        Orientation::North,
        Orientation::East,
        Orientation::South,
        Orientation::West,
    ];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn left(self) -> Self {
        Self::from_index(self.index() + 3)
    }

    pub fn right(self) -> Self {
        Self::from_index(self.index() + 1)
    }

    pub fn opposite(self) -> Self {
        Self::from_index(self.index() + 2)
    }

    fn delta(self) -> (i32, i32) {
        match self {
            Orientation::North => (0, 1),
            Orientation::East => (1, 0),
            Orientation::South => (0, -1),
            Orientation::West => (-1, 0),
        }
    }
}

/// A room record: identity, position, compass adjacency and kind.
#[derive(Debug, Clone)]
pub struct Room {
    pub id: usize,
    pub side: Side,
    pub label: String,
    pub coords: (i32, i32),
    /// Neighbors indexed by `Orientation` (N, E, S, W); `None` is a wall.
    pub neighbors: [Option<usize>; 4],
    pub kind: RoomKind,
}

#[derive(Debug, Clone)]
pub struct HallwayLayout {
    pub k1: usize,
    pub k2: usize,
    pub rooms: Vec<Room>,
}

/// Agent state: a room plus a facing direction. Encodes densely as
/// `room * 4 + orientation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HallwayState {
    pub room: usize,
    pub orientation: Orientation,
}

impl HallwayState {
    pub fn index(self) -> usize {
        self.room * 4 + self.orientation.index()
    }

    pub fn from_index(i: usize) -> Self {
        Self { room: i / 4, orientation: Orientation::from_index(i % 4) }
    }
}

impl HallwayLayout {
    fn build(k1: usize, k2: usize) -> Self {
        let mut rooms = Vec::new();
        for side in [Side::Left, Side::Right] {
            let x_off = match side {
                Side::Left => 0,
                Side::Right => 6,
            };
            build_hallway(&mut rooms, side, x_off, k1, k2);
        }
        Self { k1, k2, rooms }
    }

    pub fn num_rooms(&self) -> usize {
        self.rooms.len()
    }

    pub fn num_states(&self) -> usize {
        self.rooms.len() * 4
    }

    pub fn room_by_label(&self, side: Side, label: &str) -> Option<usize> {
        self.rooms
            .iter()
            .find(|r| r.side == side && r.label == label)
            .map(|r| r.id)
    }

    /// Deterministic movement rule. Moves that would leave the map keep the
    /// agent in place; every action is always executable.
    pub fn step(&self, state: HallwayState, action: usize) -> HallwayState {
        let HallwayState { room, orientation } = state;
        match action {
            ACT_WAIT => state,
            ACT_FORWARD => HallwayState {
                room: self.rooms[room].neighbors[orientation.index()].unwrap_or(room),
                orientation,
            },
            ACT_BACKWARD => HallwayState {
                room: self.rooms[room].neighbors[orientation.opposite().index()].unwrap_or(room),
                orientation,
            },
            ACT_TURN_LEFT => HallwayState { room, orientation: orientation.left() },
            ACT_TURN_RIGHT => HallwayState { room, orientation: orientation.right() },
            _ => unreachable!("hallway has 5 actions"),
        }
    }

    /// Egocentric observation: wall bits ahead/behind/port/starboard plus the
    /// signal carried by the room, densely indexed `0..48`.
    pub fn observation(&self, state: HallwayState) -> usize {
        let room = &self.rooms[state.room];
        let o = state.orientation;
        let wall = |dir: Orientation| room.neighbors[dir.index()].is_none() as usize;
        let bits = ((wall(o) * 2 + wall(o.opposite())) * 2 + wall(o.left())) * 2 + wall(o.right());
        let signal = match (room.kind, room.side) {
            (RoomKind::Signal, Side::Left) => 1,
            (RoomKind::Signal, Side::Right) => 2,
            _ => 0,
        };
        bits * 3 + signal
    }

    pub fn is_terminal_room(&self, room: usize) -> bool {
        matches!(self.rooms[room].kind, RoomKind::Star | RoomKind::Trap)
    }

    /// Reward for taking `action` in `state`: `+100` when the move enters a
    /// star room, `-100` when it enters a trap room, `-1` otherwise.
    pub fn reward(&self, state: HallwayState, action: usize) -> f64 {
        let next = self.step(state, action);
        if next.room == state.room {
            return REWARD_STEP;
        }
        match self.rooms[next.room].kind {
            RoomKind::Star => REWARD_STAR,
            RoomKind::Trap => REWARD_TRAP,
            _ => REWARD_STEP,
        }
    }
}

fn build_hallway(rooms: &mut Vec<Room>, side: Side, x_off: i32, k1: usize, k2: usize) {
    let junction_y = k2 as i32 + 1;
    let top_y = junction_y + k1 as i32 + 2;
    let mut push = |label: String, coords: (i32, i32), kind: RoomKind| -> usize {
        let id = rooms.len();
        rooms.push(Room {
            id,
            side,
            label,
            coords: (coords.0 + x_off, coords.1),
            neighbors: [None; 4],
            kind,
        });
        id
    };

    let a = push("a".into(), (0, 0), RoomKind::Ordinary);
    let mut corridor = vec![a];
    for i in 0..k2 {
        let label = if k2 == 1 { "b".into() } else { format!("b{}", i + 1) };
        corridor.push(push(label, (0, 1 + i as i32), RoomKind::Ordinary));
    }
    let d = push("d".into(), (0, junction_y), RoomKind::Junction);
    corridor.push(d);
    for i in 0..k1 {
        let label = if k1 == 1 { "g".into() } else { format!("g{}", i + 1) };
        corridor.push(push(label, (0, junction_y + 1 + i as i32), RoomKind::Ordinary));
    }
    let h = push("h".into(), (0, top_y - 1), RoomKind::Ordinary);
    corridor.push(h);
    let t = push("t".into(), (0, top_y), RoomKind::Junction);
    corridor.push(t);

    let c = push("c".into(), (-1, junction_y), RoomKind::Ordinary);
    let e = push("e".into(), (1, junction_y), RoomKind::Ordinary);
    let f = push("f".into(), (2, junction_y), RoomKind::Signal);

    // Star sits on the west arm in the left hallway and on the east arm in
    // the right hallway; the trap takes the other arm.
    let (west_kind, east_kind) = match side {
        Side::Left => (RoomKind::Star, RoomKind::Trap),
        Side::Right => (RoomKind::Trap, RoomKind::Star),
    };
    let west_label = if west_kind == RoomKind::Star { "star" } else { "trap" };
    let east_label = if east_kind == RoomKind::Star { "star" } else { "trap" };
    let west_arm = push(west_label.into(), (-1, top_y), west_kind);
    let east_arm = push(east_label.into(), (1, top_y), east_kind);

    let mut connect = |lo: usize, hi: usize, dir: Orientation| {
        rooms[lo].neighbors[dir.index()] = Some(hi);
        rooms[hi].neighbors[dir.opposite().index()] = Some(lo);
    };
    for pair in corridor.windows(2) {
        connect(pair[0], pair[1], Orientation::North);
    }
    connect(c, d, Orientation::East);
    connect(d, e, Orientation::East);
    connect(e, f, Orientation::East);
    connect(west_arm, t, Orientation::East);
    connect(t, east_arm, Orientation::East);
}

/// Which start states the model draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartVariant {
    /// Facing north in room `a` of either hallway.
    Standard,
    /// Facing west in room `e` of either hallway; one backward step reaches
    /// the signal room.
    Modified,
}

#[derive(Debug, Clone)]
pub struct HallwayModel {
    layout: HallwayLayout,
    start: StartVariant,
    discount: f64,
    next: Vec<u32>,
    rewards: Vec<f64>,
    obs_of: Vec<u32>,
    terminal: Vec<bool>,
    initial: Vec<f64>,
}

/// Builds the benchmark with the standard start (room `a`, facing north).
pub fn long_hallway_model(k1: usize, k2: usize) -> HallwayModel {
    HallwayModel::new(k1, k2, StartVariant::Standard)
}

/// Same domain, but episodes start facing west in room `e` so a single
/// backward action resolves all uncertainty.
pub fn modified_start_model(k1: usize, k2: usize) -> HallwayModel {
    HallwayModel::new(k1, k2, StartVariant::Modified)
}

impl HallwayModel {
    pub fn new(k1: usize, k2: usize, start: StartVariant) -> Self {
        let layout = HallwayLayout::build(k1, k2);
        let s_count = layout.num_states();
        let mut next = vec![0u32; s_count * NUM_ACTIONS];
        let mut rewards = vec![0.0; s_count * NUM_ACTIONS];
        let mut obs_of = vec![0u32; s_count];
        let mut terminal = vec![false; s_count];
        for i in 0..s_count {
            let state = HallwayState::from_index(i);
            obs_of[i] = layout.observation(state) as u32;
            terminal[i] = layout.is_terminal_room(state.room);
            for a in 0..NUM_ACTIONS {
                let slot = i * NUM_ACTIONS + a;
                if terminal[i] {
                    next[slot] = i as u32;
                    rewards[slot] = 0.0;
                } else {
                    next[slot] = layout.step(state, a).index() as u32;
                    rewards[slot] = layout.reward(state, a);
                }
            }
        }

        let mut initial = vec![0.0; s_count];
        let (label, orientation) = match start {
            StartVariant::Standard => ("a", Orientation::North),
            StartVariant::Modified => ("e", Orientation::West),
        };
        for side in [Side::Left, Side::Right] {
            let room = layout.room_by_label(side, label).expect("start room exists");
            initial[HallwayState { room, orientation }.index()] = 0.5;
        }

        Self { layout, start, discount: 0.95, next, rewards, obs_of, terminal, initial }
    }

    pub fn layout(&self) -> &HallwayLayout {
        &self.layout
    }

    pub fn start_variant(&self) -> StartVariant {
        self.start
    }

    /// The signal component of an observation: 0 none, 1 left, 2 right.
    pub fn signal_of_observation(z: usize) -> usize {
        z % 3
    }
}

impl PomdpModel for HallwayModel {
    fn num_states(&self) -> usize {
        self.layout.num_states()
    }

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn num_observations(&self) -> usize {
        NUM_OBSERVATIONS
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn transition_prob(&self, s: usize, a: usize, s_next: usize) -> f64 {
        (self.next[s * NUM_ACTIONS + a] as usize == s_next) as usize as f64
    }

    fn observation_prob(&self, s_next: usize, _a: usize, z: usize) -> f64 {
        (self.obs_of[s_next] as usize == z) as usize as f64
    }

    fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * NUM_ACTIONS + a]
    }

    fn initial_probs(&self) -> &[f64] {
        &self.initial
    }

    fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    fn generative_step(&self, s: usize, a: usize, _rng: &mut dyn RngCore) -> Step {
        let slot = s * NUM_ACTIONS + a;
        let next_state = self.next[slot] as usize;
        Step {
            next_state,
            observation: self.obs_of[next_state] as usize,
            reward: self.rewards[slot],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("layout invalid: {0}")]
pub struct LayoutError(pub String);

/// Counts and distances asserted by [`validate_layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutReport {
    pub rooms: usize,
    pub states: usize,
    pub observations: usize,
    /// Shortest action count from facing the hallway in `f` to a star, per
    /// hallway.
    pub f_to_star: [usize; 2],
    /// Optimal full-episode action count from the standard start.
    pub optimal_actions: usize,
    pub optimal_cumulative: f64,
    pub optimal_discounted: f64,
}

fn fail(msg: impl Into<String>) -> LayoutError {
    LayoutError(msg.into())
}

/// Structural self-checks for a hallway layout: stated counts, adjacency and
/// coordinate consistency, mirror symmetry between the two hallways,
/// reachability, and the shortest-path lengths that pin the geometry.
pub fn validate_layout(layout: &HallwayLayout) -> Result<LayoutReport, LayoutError> {
    let (k1, k2) = (layout.k1, layout.k2);
    let expected_rooms = 18 + 2 * k1 + 2 * k2;
    if layout.num_rooms() != expected_rooms {
        return Err(fail(format!(
            "room count: expected {expected_rooms}, found {}",
            layout.num_rooms()
        )));
    }

    for (kind, expected) in [(RoomKind::Star, 2), (RoomKind::Trap, 2), (RoomKind::Signal, 2)] {
        let n = layout.rooms.iter().filter(|r| r.kind == kind).count();
        if n != expected {
            return Err(fail(format!("expected {expected} rooms of kind {kind:?}, found {n}")));
        }
    }

    for side in [Side::Left, Side::Right] {
        for label in ["a", "c", "d", "e", "f", "h", "t", "star", "trap"] {
            if layout.room_by_label(side, label).is_none() {
                return Err(fail(format!("missing room {label} in {side:?} hallway")));
            }
        }
    }

    // Adjacency must be symmetric, unit-length in coordinates and within one
    // hallway.
    for room in &layout.rooms {
        for dir in Orientation::ALL {
            let Some(n) = room.neighbors[dir.index()] else { continue };
            let other = layout
                .rooms
                .get(n)
                .ok_or_else(|| fail(format!("room {} links to missing room {n}", room.id)))?;
            if other.neighbors[dir.opposite().index()] != Some(room.id) {
                return Err(fail(format!("adjacency between {} and {n} is one-way", room.id)));
            }
            let (dx, dy) = dir.delta();
            if other.coords != (room.coords.0 + dx, room.coords.1 + dy) {
                return Err(fail(format!("rooms {} and {n} are linked but not adjacent", room.id)));
            }
            if other.side != room.side {
                return Err(fail("the two hallways must not touch".to_string()));
            }
        }
    }

    check_mirror_symmetry(layout)?;

    // Every orientation of every non-terminal room must be reachable from a
    // start, and a terminal room must be reachable from everywhere.
    let starts: Vec<HallwayState> = [Side::Left, Side::Right]
        .into_iter()
        .map(|side| HallwayState {
            room: layout.room_by_label(side, "a").unwrap(),
            orientation: Orientation::North,
        })
        .collect();
    let reachable = forward_closure(layout, &starts);
    for i in 0..layout.num_states() {
        let s = HallwayState::from_index(i);
        if !layout.is_terminal_room(s.room) && !reachable[i] {
            return Err(fail(format!("state {i} is unreachable from the start states")));
        }
    }
    let rescuable = backward_closure_from_terminals(layout);
    for i in 0..layout.num_states() {
        let s = HallwayState::from_index(i);
        if !layout.is_terminal_room(s.room) && !rescuable[i] {
            return Err(fail(format!("no terminal state is reachable from state {i}")));
        }
    }

    // Facing the hallway in the signal room, a star is exactly 7 + k1
    // actions away.
    let mut f_to_star = [0usize; 2];
    for (i, side) in [Side::Left, Side::Right].into_iter().enumerate() {
        let f = layout.room_by_label(side, "f").unwrap();
        let start = HallwayState { room: f, orientation: Orientation::West };
        let dist = bfs_to_star(layout, start)
            .ok_or_else(|| fail(format!("no star reachable from f in {side:?} hallway")))?;
        if dist != 7 + k1 {
            return Err(fail(format!(
                "f-to-star distance in {side:?} hallway: expected {}, found {dist}",
                7 + k1
            )));
        }
        f_to_star[i] = dist;
    }

    // The scripted optimal episode must earn -1 every step and +100 on the
    // last, in k1 + k2 + 11 actions, from either start.
    let expected_actions = k1 + k2 + 11;
    let mut optimal = None;
    for side in [Side::Left, Side::Right] {
        let rewards = run_script(layout, side)?;
        if rewards.len() != expected_actions {
            return Err(fail(format!(
                "optimal episode in {side:?} hallway took {} actions, expected {expected_actions}",
                rewards.len()
            )));
        }
        let (last, rest) = rewards.split_last().unwrap();
        if *last != REWARD_STAR || rest.iter().any(|&r| r != REWARD_STEP) {
            return Err(fail(format!("optimal episode rewards malformed in {side:?} hallway")));
        }
        let cumulative: f64 = rewards.iter().sum();
        let discounted = crate::model::discounted_return(&rewards, 0.95);
        optimal = Some((rewards.len(), cumulative, discounted));
    }
    let (optimal_actions, optimal_cumulative, optimal_discounted) = optimal.unwrap();

    Ok(LayoutReport {
        rooms: layout.num_rooms(),
        states: layout.num_states(),
        observations: NUM_OBSERVATIONS,
        f_to_star,
        optimal_actions,
        optimal_cumulative,
        optimal_discounted,
    })
}

fn check_mirror_symmetry(layout: &HallwayLayout) -> Result<(), LayoutError> {
    // Map each left room to the right room at the same relative position.
    let offset: i32 = {
        let left_a = &layout.rooms[layout.room_by_label(Side::Left, "a").unwrap()];
        let right_a = &layout.rooms[layout.room_by_label(Side::Right, "a").unwrap()];
        right_a.coords.0 - left_a.coords.0
    };
    for room in layout.rooms.iter().filter(|r| r.side == Side::Left) {
        let target = (room.coords.0 + offset, room.coords.1);
        let twin = layout
            .rooms
            .iter()
            .find(|r| r.side == Side::Right && r.coords == target)
            .ok_or_else(|| fail(format!("room {} has no mirror twin", room.id)))?;
        let kinds_match = match room.kind {
            RoomKind::Star => twin.kind == RoomKind::Trap,
            RoomKind::Trap => twin.kind == RoomKind::Star,
            k => twin.kind == k,
        };
        if !kinds_match {
            return Err(fail(format!(
                "mirror twin of room {} has kind {:?}, expected the star/trap swap of {:?}",
                room.id, twin.kind, room.kind
            )));
        }
        for dir in Orientation::ALL {
            let here = room.neighbors[dir.index()].is_some();
            let there = twin.neighbors[dir.index()].is_some();
            if here != there {
                return Err(fail(format!("mirror twin of room {} differs in adjacency", room.id)));
            }
        }
    }
    Ok(())
}

fn forward_closure(layout: &HallwayLayout, starts: &[HallwayState]) -> Vec<bool> {
    let mut seen = vec![false; layout.num_states()];
    let mut queue: Vec<HallwayState> = starts.to_vec();
    for s in &queue {
        seen[s.index()] = true;
    }
    while let Some(s) = queue.pop() {
        if layout.is_terminal_room(s.room) {
            continue;
        }
        for a in 0..NUM_ACTIONS {
            let next = layout.step(s, a);
            if !seen[next.index()] {
                seen[next.index()] = true;
                queue.push(next);
            }
        }
    }
    seen
}

fn backward_closure_from_terminals(layout: &HallwayLayout) -> Vec<bool> {
    let n = layout.num_states();
    let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
    for i in 0..n {
        let s = HallwayState::from_index(i);
        if layout.is_terminal_room(s.room) {
            continue;
        }
        for a in 0..NUM_ACTIONS {
            let next = layout.step(s, a).index();
            if next != i {
                reverse[next].push(i as u32);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut queue: Vec<usize> = (0..n)
        .filter(|&i| layout.is_terminal_room(HallwayState::from_index(i).room))
        .collect();
    for &i in &queue {
        seen[i] = true;
    }
    while let Some(i) = queue.pop() {
        for &prev in &reverse[i] {
            if !seen[prev as usize] {
                seen[prev as usize] = true;
                queue.push(prev as usize);
            }
        }
    }
    seen
}

fn bfs_to_star(layout: &HallwayLayout, start: HallwayState) -> Option<usize> {
    let mut dist = vec![usize::MAX; layout.num_states()];
    let mut queue = std::collections::VecDeque::new();
    dist[start.index()] = 0;
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        let d = dist[s.index()];
        if layout.rooms[s.room].kind == RoomKind::Star {
            return Some(d);
        }
        if layout.is_terminal_room(s.room) {
            continue;
        }
        for a in 0..NUM_ACTIONS {
            let next = layout.step(s, a);
            if dist[next.index()] == usize::MAX {
                dist[next.index()] = d + 1;
                queue.push_back(next);
            }
        }
    }
    None
}

fn run_script(layout: &HallwayLayout, side: Side) -> Result<Vec<f64>, LayoutError> {
    let mut policy = ScriptedOptimalPolicy::standard(layout.k1, layout.k2);
    let mut state = HallwayState {
        room: layout.room_by_label(side, "a").unwrap(),
        orientation: Orientation::North,
    };
    let mut rewards = Vec::new();
    for _ in 0..(layout.k1 + layout.k2 + 32) {
        if layout.is_terminal_room(state.room) {
            return Ok(rewards);
        }
        let action = policy
            .next_action()
            .ok_or_else(|| fail("script exhausted before reaching a terminal room"))?;
        rewards.push(layout.reward(state, action));
        state = layout.step(state, action);
        policy.record_observation(layout.observation(state));
    }
    if layout.is_terminal_room(state.room) {
        Ok(rewards)
    } else {
        Err(fail("script did not terminate"))
    }
}

/// The hand-coded optimal policy: walk to the junction, peek down the side
/// corridor to read the signal, back out, climb to the top junction and turn
/// toward the star side the signal revealed.
///
/// Acts as an observation-driven script, so it is usable as a planner
/// substitute in episode runners.
#[derive(Debug, Clone)]
pub struct ScriptedOptimalPolicy {
    plan: Vec<ScriptStep>,
    cursor: usize,
    signal: Option<Side>,
}

#[derive(Debug, Clone, Copy)]
enum ScriptStep {
    Do(usize),
    TurnTowardStar,
}

impl ScriptedOptimalPolicy {
    pub fn standard(k1: usize, k2: usize) -> Self {
        let mut plan = Vec::new();
        plan.extend(std::iter::repeat_n(ScriptStep::Do(ACT_FORWARD), k2 + 1));
        plan.push(ScriptStep::Do(ACT_TURN_RIGHT));
        plan.push(ScriptStep::Do(ACT_FORWARD));
        plan.push(ScriptStep::Do(ACT_FORWARD));
        plan.push(ScriptStep::Do(ACT_BACKWARD));
        plan.push(ScriptStep::Do(ACT_BACKWARD));
        plan.push(ScriptStep::Do(ACT_TURN_LEFT));
        plan.extend(std::iter::repeat_n(ScriptStep::Do(ACT_FORWARD), k1 + 2));
        plan.push(ScriptStep::TurnTowardStar);
        plan.push(ScriptStep::Do(ACT_FORWARD));
        Self { plan, cursor: 0, signal: None }
    }

    pub fn modified(k1: usize, _k2: usize) -> Self {
        let mut plan = vec![
            ScriptStep::Do(ACT_BACKWARD),
            ScriptStep::Do(ACT_FORWARD),
            ScriptStep::Do(ACT_FORWARD),
            ScriptStep::Do(ACT_TURN_RIGHT),
        ];
        plan.extend(std::iter::repeat_n(ScriptStep::Do(ACT_FORWARD), k1 + 2));
        plan.push(ScriptStep::TurnTowardStar);
        plan.push(ScriptStep::Do(ACT_FORWARD));
        Self { plan, cursor: 0, signal: None }
    }

    /// Feed the observation perceived after each executed action.
    pub fn record_observation(&mut self, z: usize) {
        match HallwayModel::signal_of_observation(z) {
            1 => self.signal = Some(Side::Left),
            2 => self.signal = Some(Side::Right),
            _ => {}
        }
    }

    /// Next scripted action, or `None` once the plan is exhausted.
    pub fn next_action(&mut self) -> Option<usize> {
        let step = self.plan.get(self.cursor)?;
        self.cursor += 1;
        Some(match step {
            ScriptStep::Do(a) => *a,
            ScriptStep::TurnTowardStar => match self.signal {
                // Star is on the west arm of the left hallway, east in the
                // right one; arriving at the top junction facing north.
                Some(Side::Left) => ACT_TURN_LEFT,
                Some(Side::Right) => ACT_TURN_RIGHT,
                None => ACT_WAIT,
            },
        })
    }
}

/// Plain-text map of the layout. North is up; `*` marks stars, `X` traps.
pub fn render_map(layout: &HallwayLayout) -> String {
    let min_x = layout.rooms.iter().map(|r| r.coords.0).min().unwrap_or(0);
    let max_x = layout.rooms.iter().map(|r| r.coords.0).max().unwrap_or(0);
    let min_y = layout.rooms.iter().map(|r| r.coords.1).min().unwrap_or(0);
    let max_y = layout.rooms.iter().map(|r| r.coords.1).max().unwrap_or(0);
    let width = (max_x - min_x + 1) as usize;
    let height = (max_y - min_y + 1) as usize;
    let mut grid = vec![vec![b'.'; width]; height];
    for room in &layout.rooms {
        let col = (room.coords.0 - min_x) as usize;
        let row = (max_y - room.coords.1) as usize;
        grid[row][col] = match room.kind {
            RoomKind::Star => b'*',
            RoomKind::Trap => b'X',
            _ => room.label.bytes().next().unwrap_or(b'?'),
        };
    }
    let mut out = String::new();
    for row in grid {
        out.push_str(std::str::from_utf8(&row).unwrap());
        out.push('\n');
    }
    out
}

/// Machine-readable adjacency listing: one room per line with id, label,
/// side, coordinates, the four compass neighbors (or WALL) and the kind.
pub fn adjacency_listing(layout: &HallwayLayout) -> String {
    let mut out = String::from("id label side x y N E S W kind\n");
    for room in &layout.rooms {
        let neighbor = |dir: Orientation| match room.neighbors[dir.index()] {
            Some(id) => id.to_string(),
            None => "WALL".to_string(),
        };
        out.push_str(&format!(
            "{} {} {:?} {} {} {} {} {} {} {:?}\n",
            room.id,
            room.label,
            room.side,
            room.coords.0,
            room.coords.1,
            neighbor(Orientation::North),
            neighbor(Orientation::East),
            neighbor(Orientation::South),
            neighbor(Orientation::West),
            room.kind,
        ));
    }
    out
}
