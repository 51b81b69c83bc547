//! Node trajectories: random waypoint on an open rectangle, and
//! points-of-interest walks over a map graph.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Position, Velocity};

/// Upper bound on route legs resolved within a single step.
const MAX_LEGS_PER_STEP: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("no route between map coordinates {from} and {to}")]
    UnreachableWaypoint { from: usize, to: usize },
    #[error("no map coordinate lies farther than {variation} m from POI {poi}")]
    NoFeasibleCoordinate { poi: usize, variation: f64 },
    #[error("requested {requested} destinations but the map only tags {available} POIs")]
    TooManyDestinations { requested: usize, available: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge ({0}, {1}) references a missing coordinate")]
    DanglingEdge(usize, usize),
    #[error("POI tag references missing coordinate {0}")]
    DanglingPoi(usize),
    #[error("edge ({0}, {1}) has zero length")]
    ZeroLengthEdge(usize, usize),
    #[error("map graph is not connected")]
    Disconnected,
    #[error("map has no coordinates")]
    Empty,
}

/// Closed interval sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct UniformRange {
    pub min: f64,
    pub max: f64,
}

impl UniformRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.max <= self.min {
            self.min
        } else {
            rng.random_range(self.min..=self.max)
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

impl From<[f64; 2]> for UniformRange {
    fn from(v: [f64; 2]) -> Self {
        UniformRange::new(v[0], v[1])
    }
}

impl From<UniformRange> for [f64; 2] {
    fn from(r: UniformRange) -> Self {
        [r.min, r.max]
    }
}

/// Rectangular area with its origin at (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn contains(&self, p: Position) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn center(&self) -> Position {
        Position::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        Position::new(
            rng.random_range(0.0..=self.width),
            rng.random_range(0.0..=self.height),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Moving,
    Waiting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    pub position: Position,
    pub velocity: Velocity,
    pub mode: Mode,
    pub wait_remaining: f64,
    pub current_waypoint: Position,
    /// Speed held for the current trip.
    pub speed: f64,
    /// Remaining points to pass through, ending at `current_waypoint`.
    pub route: VecDeque<Position>,
    /// Map coordinate index of `current_waypoint`, for map walks.
    pub waypoint_vertex: Option<usize>,
}

impl MobilityState {
    /// Node at `position` heading straight for `waypoint`.
    pub fn heading(position: Position, waypoint: Position, speed: f64) -> Self {
        Self {
            position,
            velocity: Velocity::towards(position, waypoint, speed),
            mode: Mode::Moving,
            wait_remaining: 0.0,
            current_waypoint: waypoint,
            speed,
            route: VecDeque::from([waypoint]),
            waypoint_vertex: None,
        }
    }

    /// Node paused at `position` for `wait` more seconds.
    pub fn waiting(position: Position, wait: f64) -> Self {
        Self {
            position,
            velocity: Velocity::ZERO,
            mode: Mode::Waiting,
            wait_remaining: wait,
            current_waypoint: position,
            speed: 0.0,
            route: VecDeque::new(),
            waypoint_vertex: None,
        }
    }
}

/// Moves a node along its route for `dt` seconds. `next_trip` is called
/// whenever a pause ends and must install a new route and speed.
fn advance<R, F>(
    state: &mut MobilityState,
    dt: f64,
    wait: UniformRange,
    rng: &mut R,
    mut next_trip: F,
) -> Result<(), MobilityError>
where
    R: Rng + ?Sized,
    F: FnMut(&mut MobilityState, &mut R) -> Result<(), MobilityError>,
{
    let mut left = dt;
    for _ in 0..MAX_LEGS_PER_STEP {
        match state.mode {
            Mode::Waiting => {
                if state.wait_remaining > left {
                    state.wait_remaining -= left;
                    state.velocity = Velocity::ZERO;
                    return Ok(());
                }
                left -= state.wait_remaining;
                state.wait_remaining = 0.0;
                next_trip(state, rng)?;
                state.mode = Mode::Moving;
            }
            Mode::Moving => {
                let Some(&next) = state.route.front() else {
                    state.mode = Mode::Waiting;
                    state.wait_remaining = wait.sample(rng);
                    continue;
                };
                let d = state.position.distance(next);
                let reach = state.speed * left;
                if reach < d {
                    state.position = state.position.lerp(next, reach / d);
                    state.velocity = Velocity::towards(state.position, next, state.speed);
                    return Ok(());
                }
                state.position = next;
                state.route.pop_front();
                if state.speed > 0.0 {
                    left = (left - d / state.speed).max(0.0);
                }
                if state.route.is_empty() {
                    state.mode = Mode::Waiting;
                    state.wait_remaining = wait.sample(rng);
                    state.velocity = Velocity::ZERO;
                }
            }
        }
    }
    state.velocity = match (state.mode, state.route.front()) {
        (Mode::Moving, Some(&next)) => Velocity::towards(state.position, next, state.speed),
        _ => Velocity::ZERO,
    };
    Ok(())
}

/// One random-waypoint step on an open rectangle.
pub fn rwp_step<R: Rng + ?Sized>(
    state: &mut MobilityState,
    dt: f64,
    bounds: Bounds,
    speed: UniformRange,
    wait: UniformRange,
    rng: &mut R,
) {
    advance(state, dt, wait, rng, |s, rng| {
        let wp = bounds.random_point(rng);
        s.speed = speed.sample(rng);
        s.current_waypoint = wp;
        s.route = VecDeque::from([wp]);
        Ok(())
    })
    .expect("open-plane trips are always routable");
}

/// Uniform start position with a first waypoint already drawn.
pub fn rwp_initial<R: Rng + ?Sized>(bounds: Bounds, speed: UniformRange, rng: &mut R) -> MobilityState {
    let start = bounds.random_point(rng);
    let wp = bounds.random_point(rng);
    MobilityState::heading(start, wp, speed.sample(rng))
}

/// Coordinates joined by bidirectional path segments, with POI tags.
#[derive(Debug, Clone)]
pub struct MapGraph {
    coordinates: Vec<Position>,
    edges: Vec<(usize, usize)>,
    pois: BTreeMap<u32, Vec<usize>>,
    /// `dist[s * n + t]`, shortest path length.
    dist: Vec<f64>,
    /// `pred[s * n + t]`, predecessor of `t` on the shortest path from `s`.
    pred: Vec<u32>,
    edge_offsets: Vec<f64>,
    connected: bool,
}

impl MapGraph {
    /// Builds a map and precomputes all-pairs shortest paths. Connectivity
    /// is recorded, not enforced; see [`MapGraph::ensure_connected`].
    pub fn new(
        coordinates: Vec<Position>,
        edges: Vec<(usize, usize)>,
        pois: BTreeMap<u32, Vec<usize>>,
    ) -> Result<Self, MapError> {
        let n = coordinates.len();
        if n == 0 {
            return Err(MapError::Empty);
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(MapError::DanglingEdge(a, b));
            }
            let len = coordinates[a].distance(coordinates[b]);
            if len <= 0.0 {
                return Err(MapError::ZeroLengthEdge(a, b));
            }
            adj[a].push((b, len));
            adj[b].push((a, len));
        }
        for &v in pois.values().flatten() {
            if v >= n {
                return Err(MapError::DanglingPoi(v));
            }
        }
        let mut dist = vec![f64::INFINITY; n * n];
        let mut pred = vec![u32::MAX; n * n];
        for s in 0..n {
            dijkstra(&adj, s, &mut dist[s * n..(s + 1) * n], &mut pred[s * n..(s + 1) * n]);
        }
        let connected = dist[..n].iter().all(|d| d.is_finite());
        let mut edge_offsets = Vec::with_capacity(edges.len());
        let mut acc = 0.0;
        for &(a, b) in &edges {
            edge_offsets.push(acc);
            acc += coordinates[a].distance(coordinates[b]);
        }
        edge_offsets.push(acc);
        Ok(Self {
            coordinates,
            edges,
            pois,
            dist,
            pred,
            edge_offsets,
            connected,
        })
    }

    /// Rectangular grid with `spacing` meters between neighbours.
    pub fn grid(cols: usize, rows: usize, spacing: f64) -> Result<Self, MapError> {
        let mut coords = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                coords.push(Position::new(c as f64 * spacing, r as f64 * spacing));
            }
        }
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    edges.push((i, i + 1));
                }
                if r + 1 < rows {
                    edges.push((i, i + cols));
                }
            }
        }
        MapGraph::new(coords, edges, BTreeMap::new())
    }

    /// Grid with four POI areas, one per quadrant. Each area tags
    /// `pois_per_area` coordinates spread evenly over an ellipse around the
    /// quadrant centre (semi-axes 40% of the quadrant's half extents), so
    /// trips between an area's POIs cover the whole area.
    pub fn four_area_grid(cols: usize, rows: usize, spacing: f64, pois_per_area: usize) -> Result<Self, MapError> {
        let base = MapGraph::grid(cols, rows, spacing)?;
        let w = (cols - 1) as f64 * spacing;
        let h = (rows - 1) as f64 * spacing;
        let (ax, ay) = (0.4 * w / 2.0, 0.4 * h / 2.0);
        let centres = [
            Position::new(w * 0.25, h * 0.25),
            Position::new(w * 0.75, h * 0.25),
            Position::new(w * 0.25, h * 0.75),
            Position::new(w * 0.75, h * 0.75),
        ];
        let mut pois = BTreeMap::new();
        for (g, c) in centres.iter().enumerate() {
            let inside: Vec<usize> = (0..base.coordinates.len())
                .filter(|&i| {
                    let p = base.coordinates[i];
                    ((p.x - c.x) / ax).powi(2) + ((p.y - c.y) / ay).powi(2) <= 1.0
                })
                .collect();
            let mut chosen: Vec<usize> = if inside.len() >= pois_per_area {
                (0..pois_per_area).map(|k| inside[k * inside.len() / pois_per_area]).collect()
            } else {
                let mut idx: Vec<usize> = (0..base.coordinates.len()).collect();
                idx.sort_by(|&a, &b| {
                    base.coordinates[a]
                        .distance(*c)
                        .total_cmp(&base.coordinates[b].distance(*c))
                        .then(a.cmp(&b))
                });
                idx.truncate(pois_per_area);
                idx
            };
            chosen.sort_unstable();
            pois.insert(g as u32, chosen);
        }
        MapGraph::new(base.coordinates, base.edges, pois)
    }

    pub fn coordinates(&self) -> &[Position] {
        &self.coordinates
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn pois(&self) -> &BTreeMap<u32, Vec<usize>> {
        &self.pois
    }

    /// Every POI-tagged coordinate, deduplicated, ascending.
    pub fn all_pois(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pois.values().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn ensure_connected(&self) -> Result<(), MapError> {
        if self.connected {
            Ok(())
        } else {
            Err(MapError::Disconnected)
        }
    }

    pub fn len(&self) -> usize {
        self.coordinates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coordinates.is_empty()
    }

    pub fn path_length(&self, from: usize, to: usize) -> f64 {
        self.dist[from * self.len() + to]
    }

    /// Coordinates visited after `from` on the shortest path to `to`,
    /// ending with `to` itself. Empty when `from == to`.
    pub fn route(&self, from: usize, to: usize) -> Result<Vec<usize>, MobilityError> {
        let n = self.len();
        if !self.dist[from * n + to].is_finite() {
            return Err(MobilityError::UnreachableWaypoint { from, to });
        }
        let mut path = Vec::new();
        let mut v = to;
        while v != from {
            path.push(v);
            v = self.pred[from * n + v] as usize;
        }
        path.reverse();
        Ok(path)
    }

    /// Largest distance between any two coordinates (straight line).
    pub fn extent(&self) -> f64 {
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in &self.coordinates {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        (max_x - min_x).hypot(max_y - min_y)
    }

    /// Uniform point over total edge length: `(edge index, fraction)`.
    fn random_edge_point<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let total = *self.edge_offsets.last().unwrap_or(&0.0);
        if self.edges.is_empty() || total <= 0.0 {
            return (usize::MAX, 0.0);
        }
        let u = rng.random_range(0.0..total);
        let e = self.edge_offsets.partition_point(|&o| o <= u) - 1;
        let e = e.min(self.edges.len() - 1);
        let (a, b) = self.edges[e];
        let len = self.coordinates[a].distance(self.coordinates[b]);
        (e, ((u - self.edge_offsets[e]) / len).clamp(0.0, 1.0))
    }

    /// Parses the line-oriented map format: `V x y`, `E i j`, `P group i`.
    /// Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self, MapError> {
        let mut coords = Vec::new();
        let mut edges = Vec::new();
        let mut pois: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let fields: Vec<&str> = body.split_whitespace().collect();
            let err = |msg: &str| MapError::Parse {
                line,
                msg: format!("{msg}: `{body}`"),
            };
            match fields.as_slice() {
                ["V", x, y] => {
                    let x: f64 = x.parse().map_err(|_| err("bad x coordinate"))?;
                    let y: f64 = y.parse().map_err(|_| err("bad y coordinate"))?;
                    if !x.is_finite() || !y.is_finite() {
                        return Err(err("non-finite coordinate"));
                    }
                    coords.push(Position::new(x, y));
                }
                ["E", i, j] => {
                    let i: usize = i.parse().map_err(|_| err("bad edge index"))?;
                    let j: usize = j.parse().map_err(|_| err("bad edge index"))?;
                    edges.push((i, j));
                }
                ["P", g, i] => {
                    let g: u32 = g.parse().map_err(|_| err("bad POI group"))?;
                    let i: usize = i.parse().map_err(|_| err("bad POI index"))?;
                    pois.entry(g).or_default().push(i);
                }
                _ => return Err(err("expected `V x y`, `E i j` or `P group i`")),
            }
        }
        MapGraph::new(coords, edges, pois)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.coordinates {
            let _ = writeln!(out, "V {} {}", p.x, p.y);
        }
        for (a, b) in &self.edges {
            let _ = writeln!(out, "E {a} {b}");
        }
        for (g, vs) in &self.pois {
            for v in vs {
                let _ = writeln!(out, "P {g} {v}");
            }
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier(f64, usize);

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], s: usize, dist: &mut [f64], pred: &mut [u32]) {
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    pred[s] = s as u32;
    heap.push(Frontier(0.0, s));
    while let Some(Frontier(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = u as u32;
                heap.push(Frontier(nd, v));
            }
        }
    }
}

/// A node group's preferred coordinates and how strongly it prefers them.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiProfile {
    pub group_id: u32,
    pub poi_coordinates: Vec<usize>,
    pub interest: f64,
}

impl PoiProfile {
    fn draw_target<R: Rng + ?Sized>(&self, map: &MapGraph, rng: &mut R) -> usize {
        if !self.poi_coordinates.is_empty() && rng.random_bool(self.interest.clamp(0.0, 1.0)) {
            self.poi_coordinates[rng.random_range(0..self.poi_coordinates.len())]
        } else {
            rng.random_range(0..map.len())
        }
    }
}

fn install_map_trip(
    state: &mut MobilityState,
    map: &MapGraph,
    from: usize,
    to: usize,
    speed: f64,
) -> Result<(), MobilityError> {
    let route = map.route(from, to)?;
    state.route = route.iter().map(|&v| map.coordinates[v]).collect();
    state.current_waypoint = map.coordinates[to];
    state.waypoint_vertex = Some(to);
    state.speed = speed;
    Ok(())
}

/// One step of a POI-interest walk along the map's shortest paths.
pub fn poi_step<R: Rng + ?Sized>(
    state: &mut MobilityState,
    dt: f64,
    map: &MapGraph,
    profile: &PoiProfile,
    speed: UniformRange,
    wait: UniformRange,
    rng: &mut R,
) -> Result<(), MobilityError> {
    advance(state, dt, wait, rng, |s, rng| {
        let from = s.waypoint_vertex.unwrap_or_else(|| nearest_coordinate(map, s.position));
        let to = profile.draw_target(map, rng);
        let v = speed.sample(rng);
        install_map_trip(s, map, from, to, v)
    })
}

/// Uniform start point over the map's edges, routed towards a first target
/// through whichever end of its edge gives the shorter trip.
pub fn poi_initial<R: Rng + ?Sized>(
    map: &MapGraph,
    profile: &PoiProfile,
    speed: UniformRange,
    rng: &mut R,
) -> Result<MobilityState, MobilityError> {
    let (e, frac) = map.random_edge_point(rng);
    let target = profile.draw_target(map, rng);
    let v = speed.sample(rng);
    let (start, entry) = if e == usize::MAX {
        (map.coordinates[0], 0)
    } else {
        let (a, b) = map.edges[e];
        let p = map.coordinates[a].lerp(map.coordinates[b], frac);
        let via_a = p.distance(map.coordinates[a]) + map.path_length(a, target);
        let via_b = p.distance(map.coordinates[b]) + map.path_length(b, target);
        (p, if via_a <= via_b { a } else { b })
    };
    let mut state = MobilityState::heading(start, map.coordinates[entry], v);
    let tail = map.route(entry, target)?;
    state.route = std::iter::once(entry)
        .chain(tail)
        .map(|i| map.coordinates[i])
        .collect();
    state.current_waypoint = map.coordinates[target];
    state.waypoint_vertex = Some(target);
    state.velocity = Velocity::towards(start, state.route[0], v);
    Ok(state)
}

fn nearest_coordinate(map: &MapGraph, p: Position) -> usize {
    (0..map.len())
        .min_by(|&a, &b| {
            map.coordinates[a]
                .distance(p)
                .total_cmp(&map.coordinates[b].distance(p))
        })
        .unwrap_or(0)
}

/// Picks `count` distinct POIs and returns one destination coordinate per
/// POI. With `variation > 0`, each destination is the map coordinate
/// closest to a point `variation` meters from its POI (random bearing)
/// among those strictly farther than `variation` from the POI.
pub fn place_destinations<R: Rng + ?Sized>(
    map: &MapGraph,
    count: usize,
    variation: f64,
    rng: &mut R,
) -> Result<Vec<Position>, MobilityError> {
    let pois = map.all_pois();
    if count > pois.len() {
        return Err(MobilityError::TooManyDestinations {
            requested: count,
            available: pois.len(),
        });
    }
    let chosen: Vec<usize> = sample(rng, pois.len(), count).into_iter().map(|i| pois[i]).collect();
    let mut out = Vec::with_capacity(count);
    for poi in chosen {
        let anchor = map.coordinates[poi];
        if variation <= 0.0 {
            out.push(anchor);
            continue;
        }
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let target = Position::new(anchor.x + variation * theta.cos(), anchor.y + variation * theta.sin());
        let best = map
            .coordinates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.distance(anchor) > variation)
            .min_by(|(ia, a), (ib, b)| a.distance(target).total_cmp(&b.distance(target)).then(ia.cmp(ib)))
            .map(|(_, c)| *c)
            .ok_or(MobilityError::NoFeasibleCoordinate { poi, variation })?;
        out.push(best);
    }
    Ok(out)
}
