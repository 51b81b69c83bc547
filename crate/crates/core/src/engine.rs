//! Time-stepped simulation loop.
//!
//! Each step runs, in order: mobility, expiry sweep, contact detection,
//! slot arbitration, encounter-set and acknowledgement updates, deliveries,
//! routing decisions with their transfers, and message generation.
//!
//! Mobile nodes carry ids `0..nodes`; destinations follow. Every source of
//! randomness draws from its own ChaCha stream of the run seed, so node
//! trajectories, traffic and link arbitration are identical across routing
//! schemes for the same seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::contacts::{arbitrate_slots, detect_contacts, Contact, Link, TransferAction, TransferMode};
use crate::geometry::Position;
use crate::messages::{apply_acks, evict_for, AckLedger, Buffer, EncounterSet, EvictionPolicy, MessageCopy, MessageId, NodeId};
use crate::metrics::RunMetrics;
use crate::mobility::{
    place_destinations, poi_initial, poi_step, rwp_initial, rwp_step, Bounds, MapGraph, MobilityError, MobilityState, PoiProfile,
};
use crate::routing::{decide, deliveries, transmission_order, EncounterContext, NodeView, Scheme};
use crate::scenario::{ConfigError, DestinationConfig, GenerationMode, MobilityConfig};

pub use crate::events::{Event, EventKind, EventLog};
pub use crate::scenario::ScenarioConfig;

const STREAM_PLACEMENT: u64 = 1;
const STREAM_TRAFFIC: u64 = 2;
const STREAM_ARBITRATION: u64 = 3;
const STREAM_NODE_BASE: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("mobility: {0}")]
    Mobility(#[from] MobilityError),
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

enum World {
    Plane { bounds: Bounds },
    Map { map: MapGraph, profiles: Vec<PoiProfile> },
}

#[derive(Debug, Clone)]
pub struct MobileNode {
    pub id: NodeId,
    pub mobility: MobilityState,
    pub buffer: Buffer,
    pub encountered: EncounterSet,
    pub acks: AckLedger,
    /// Index into the scenario's POI groups.
    pub group: usize,
    acks_version: u64,
    rng: ChaCha8Rng,
}

impl MobileNode {
    fn view(&self) -> NodeView<'_> {
        NodeView {
            id: self.id,
            position: self.mobility.position,
            velocity: self.mobility.velocity,
            encountered: &self.encountered,
            acks: &self.acks,
            buffer: &self.buffer,
        }
    }
}

/// Stationary sink with unlimited storage.
#[derive(Debug, Clone)]
pub struct DestinationNode {
    pub id: NodeId,
    pub position: Position,
    pub received: AckLedger,
    received_version: u64,
}

struct LinkState {
    link: Link,
    /// Acknowledgement versions of both ends at the last exchange.
    synced: Option<(u64, u64)>,
}

/// Live copies of one message.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LiveCount {
    pub tickets: u64,
    pub copies: u64,
}

/// Ticket bookkeeping derived from log events alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TicketCensus {
    initial: BTreeMap<MessageId, u64>,
    minted: BTreeMap<MessageId, u64>,
    removed: BTreeMap<MessageId, u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CensusViolation {
    /// Live tickets differ from minted minus removed.
    Tickets { id: MessageId, live: u64, expected: i64 },
    /// More live copies than the copy budget plus extra copies.
    Copies { id: MessageId, live: u64, allowed: u64 },
    /// A live copy for a message the log never created.
    Unknown { id: MessageId },
}

impl TicketCensus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn absorb(&mut self, kind: &EventKind) {
        match *kind {
            EventKind::Created { id, tickets, .. } => {
                self.initial.insert(id, tickets as u64);
                *self.minted.entry(id).or_default() += tickets as u64;
            }
            EventKind::ExtraCopy { id, .. } => *self.minted.entry(id).or_default() += 1,
            EventKind::Delivered { id, tickets, .. }
            | EventKind::Expired { id, tickets, .. }
            | EventKind::Evicted { id, tickets, .. }
            | EventKind::Acked { id, tickets, .. } => *self.removed.entry(id).or_default() += tickets as u64,
            EventKind::Replicated { .. } | EventKind::Forwarded { .. } => {}
        }
    }

    /// Tickets minted beyond the initial budget, per message.
    pub fn extra(&self, id: MessageId) -> u64 {
        self.minted.get(&id).copied().unwrap_or(0) - self.initial.get(&id).copied().unwrap_or(0)
    }

    pub fn total_extra(&self) -> u64 {
        self.minted.keys().map(|&id| self.extra(id)).sum()
    }

    /// Compares the census against the copies actually alive.
    pub fn check(&self, live: &BTreeMap<MessageId, LiveCount>) -> Vec<CensusViolation> {
        let mut out = Vec::new();
        for (&id, &minted) in &self.minted {
            let removed = self.removed.get(&id).copied().unwrap_or(0);
            let expected = minted as i64 - removed as i64;
            let here = live.get(&id).copied().unwrap_or_default();
            if here.tickets as i64 != expected {
                out.push(CensusViolation::Tickets {
                    id,
                    live: here.tickets,
                    expected,
                });
            }
            let allowed = self.initial.get(&id).copied().unwrap_or(0) + self.extra(id);
            if here.copies > allowed {
                out.push(CensusViolation::Copies {
                    id,
                    live: here.copies,
                    allowed,
                });
            }
        }
        for &id in live.keys() {
            if !self.minted.contains_key(&id) {
                out.push(CensusViolation::Unknown { id });
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: EventLog,
    pub metrics: RunMetrics,
}

pub struct Simulation {
    cfg: ScenarioConfig,
    world: World,
    nodes: Vec<MobileNode>,
    dests: Vec<DestinationNode>,
    dest_positions: BTreeMap<NodeId, Position>,
    links: BTreeMap<(usize, usize), LinkState>,
    matching: Vec<(NodeId, NodeId)>,
    log: EventLog,
    step: u64,
    total_steps: u64,
    traffic: ChaCha8Rng,
    arbitration: ChaCha8Rng,
    next_message: u32,
    generation_round: u64,
    acks: bool,
    policy: EvictionPolicy,
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let speed = cfg.mobility.speed();
        let mut placement = stream(cfg.seed, STREAM_PLACEMENT);
        let (world, dest_pos) = match &cfg.mobility {
            MobilityConfig::Rwp { width_m, height_m, .. } => {
                let bounds = Bounds {
                    width: *width_m,
                    height: *height_m,
                };
                let dests = match &cfg.destinations {
                    DestinationConfig::Center => vec![bounds.center()],
                    DestinationConfig::Fixed { positions } => positions.iter().map(|p| Position::new(p[0], p[1])).collect(),
                    DestinationConfig::Poi { .. } => {
                        return Err(ConfigError::Validation("poi destinations need poi-map mobility".into()).into())
                    }
                };
                (World::Plane { bounds }, dests)
            }
            MobilityConfig::PoiMap { map, interest, .. } => {
                let map = map.build()?;
                let dests = match &cfg.destinations {
                    DestinationConfig::Center => vec![map_center(&map)],
                    DestinationConfig::Fixed { positions } => positions.iter().map(|p| Position::new(p[0], p[1])).collect(),
                    DestinationConfig::Poi { count, variation_m } => place_destinations(&map, *count, *variation_m, &mut placement)?,
                };
                let mut profiles: Vec<PoiProfile> = map
                    .pois()
                    .iter()
                    .map(|(&group_id, pois)| PoiProfile {
                        group_id,
                        poi_coordinates: pois.clone(),
                        interest: *interest,
                    })
                    .collect();
                if profiles.is_empty() {
                    profiles.push(PoiProfile {
                        group_id: 0,
                        poi_coordinates: Vec::new(),
                        interest: *interest,
                    });
                }
                (World::Map { map, profiles }, dests)
            }
        };

        let mut nodes = Vec::with_capacity(cfg.nodes);
        for i in 0..cfg.nodes {
            let mut rng = stream(cfg.seed, STREAM_NODE_BASE + i as u64);
            let (mobility, group) = match &world {
                World::Plane { bounds } => (rwp_initial(*bounds, speed, &mut rng), 0),
                World::Map { map, profiles } => {
                    let g = i % profiles.len();
                    (poi_initial(map, &profiles[g], speed, &mut rng)?, g)
                }
            };
            nodes.push(MobileNode {
                id: NodeId(i as u32),
                mobility,
                buffer: Buffer::new(cfg.buffer_bytes),
                encountered: EncounterSet::new(),
                acks: AckLedger::new(),
                group,
                acks_version: 0,
                rng,
            });
        }
        let dests: Vec<DestinationNode> = dest_pos
            .into_iter()
            .enumerate()
            .map(|(j, position)| DestinationNode {
                id: NodeId((cfg.nodes + j) as u32),
                position,
                received: AckLedger::new(),
                received_version: 0,
            })
            .collect();
        let dest_positions = dests.iter().map(|d| (d.id, d.position)).collect();
        let total_steps = (cfg.horizon() / cfg.slot_s - 1e-9).ceil().max(0.0) as u64;
        Ok(Self {
            acks: cfg.acks_enabled(),
            policy: if cfg.scheme == Scheme::Tbhgr {
                EvictionPolicy::LowestUtility
            } else {
                EvictionPolicy::OldestFirst
            },
            traffic: stream(cfg.seed, STREAM_TRAFFIC),
            arbitration: stream(cfg.seed, STREAM_ARBITRATION),
            cfg,
            world,
            nodes,
            dests,
            dest_positions,
            links: BTreeMap::new(),
            matching: Vec::new(),
            log: EventLog::new(),
            step: 0,
            total_steps,
            next_message: 0,
            generation_round: 0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn now(&self) -> f64 {
        self.step as f64 * self.cfg.slot_s
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.total_steps
    }

    pub fn nodes(&self) -> &[MobileNode] {
        &self.nodes
    }

    pub fn destinations(&self) -> &[DestinationNode] {
        &self.dests
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    /// Node pairs granted the channel in the last step.
    pub fn matching(&self) -> &[(NodeId, NodeId)] {
        &self.matching
    }

    /// Tickets and copies currently held, per message.
    pub fn live_census(&self) -> BTreeMap<MessageId, LiveCount> {
        let mut out: BTreeMap<MessageId, LiveCount> = BTreeMap::new();
        for n in &self.nodes {
            for c in n.buffer.iter() {
                let e = out.entry(c.id).or_default();
                e.tickets += c.tickets as u64;
                e.copies += 1;
            }
        }
        out
    }

    pub fn run_to_end(&mut self) -> Result<(), EngineError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(self) -> RunOutput {
        let metrics = RunMetrics::from_log(&self.log);
        RunOutput { log: self.log, metrics }
    }

    /// Advances the simulation by one slot.
    pub fn step(&mut self) -> Result<(), EngineError> {
        self.step += 1;
        let now = self.now();
        self.advance_mobility()?;
        self.expire(now);

        let positions: Vec<Position> = self
            .nodes
            .iter()
            .map(|n| n.mobility.position)
            .chain(self.dests.iter().map(|d| d.position))
            .collect();
        let mut pairs = detect_contacts(&positions, self.cfg.range_m);
        let n = self.nodes.len();
        // destinations never talk to each other
        pairs.retain(|&(a, _)| a < n);
        self.refresh_links(&pairs, now);
        let matched = arbitrate_slots(&pairs, &mut self.arbitration);
        self.matching = matched.iter().map(|&(a, b)| (self.id_of(a), self.id_of(b))).collect();

        self.exchange_state(&pairs, now);
        for &(a, b) in &matched {
            if b >= n {
                self.deliver(a, b - n, now);
            }
        }
        for &(a, b) in &matched {
            if b < n {
                self.route_pair(a, b, now);
            }
        }
        self.generate(now);
        Ok(())
    }

    fn id_of(&self, index: usize) -> NodeId {
        if index < self.nodes.len() {
            self.nodes[index].id
        } else {
            self.dests[index - self.nodes.len()].id
        }
    }

    fn advance_mobility(&mut self) -> Result<(), EngineError> {
        let dt = self.cfg.slot_s;
        let speed = self.cfg.mobility.speed();
        let wait = self.cfg.mobility.wait();
        for node in &mut self.nodes {
            match &self.world {
                World::Plane { bounds } => rwp_step(&mut node.mobility, dt, *bounds, speed, wait, &mut node.rng),
                World::Map { map, profiles } => {
                    poi_step(&mut node.mobility, dt, map, &profiles[node.group], speed, wait, &mut node.rng)?
                }
            }
        }
        Ok(())
    }

    fn expire(&mut self, now: f64) {
        for node in &mut self.nodes {
            for c in node.buffer.drain_where(|c| c.is_expired(now)) {
                self.log.push(
                    now,
                    EventKind::Expired {
                        id: c.id,
                        node: node.id,
                        tickets: c.tickets,
                    },
                );
            }
        }
    }

    fn refresh_links(&mut self, pairs: &[(usize, usize)], now: f64) {
        let mut next = BTreeMap::new();
        for &(a, b) in pairs {
            let state = self.links.remove(&(a, b)).unwrap_or_else(|| LinkState {
                link: Link::new(Contact {
                    node_a: self.id_of(a),
                    node_b: self.id_of(b),
                    started_at: now,
                    link_rate: self.cfg.bandwidth_bps,
                }),
                synced: None,
            });
            next.insert((a, b), state);
        }
        self.links = next;
    }

    fn drop_acked(&mut self, i: usize, now: f64) {
        let node = &mut self.nodes[i];
        for c in apply_acks(&mut node.buffer, &node.acks) {
            self.log.push(
                now,
                EventKind::Acked {
                    id: c.id,
                    node: node.id,
                    tickets: c.tickets,
                },
            );
        }
    }

    /// Encounter-set records and acknowledgement exchange for every pair in
    /// range, matched or not.
    fn exchange_state(&mut self, pairs: &[(usize, usize)], now: f64) {
        let n = self.nodes.len();
        for &(a, b) in pairs {
            if b >= n {
                let dest = &self.dests[b - n];
                self.nodes[a].encountered.record(dest.id);
                if !self.acks {
                    continue;
                }
                let versions = (self.nodes[a].acks_version, dest.received_version);
                if self.links[&(a, b)].synced == Some(versions) {
                    continue;
                }
                if self.nodes[a].acks.merge(&dest.received) {
                    self.nodes[a].acks_version += 1;
                    self.drop_acked(a, now);
                }
                let synced = (self.nodes[a].acks_version, self.dests[b - n].received_version);
                self.links.get_mut(&(a, b)).expect("link exists for every pair").synced = Some(synced);
            } else if self.acks {
                let versions = (self.nodes[a].acks_version, self.nodes[b].acks_version);
                let link = self.links.get_mut(&(a, b)).expect("link exists for every pair");
                if link.synced == Some(versions) {
                    continue;
                }
                let (na, nb) = pair_mut(&mut self.nodes, a, b);
                let a_grew = na.acks.merge(&nb.acks);
                let b_grew = nb.acks.merge(&na.acks);
                if a_grew {
                    na.acks_version += 1;
                }
                if b_grew {
                    nb.acks_version += 1;
                }
                link.synced = Some((na.acks_version, nb.acks_version));
                if a_grew {
                    self.drop_acked(a, now);
                }
                if b_grew {
                    self.drop_acked(b, now);
                }
            }
        }
    }

    fn deliver(&mut self, i: usize, j: usize, now: f64) {
        let n = self.nodes.len();
        let slot = self.cfg.slot_s;
        let node = &self.nodes[i];
        let dest = &self.dests[j];
        let actions = deliveries(self.cfg.scheme, node.id, &node.buffer, dest.id, &dest.received, now);
        let link = &mut self.links.get_mut(&(i, n + j)).expect("matched pairs have links").link;
        let mut budget = link.contact.slot_budget(slot);
        for action in link.transmit(actions, &mut budget) {
            let Some(copy) = self.nodes[i].buffer.remove(action.message) else {
                continue;
            };
            let dest = &mut self.dests[j];
            if dest.received.insert(copy.id) {
                dest.received_version += 1;
            }
            if self.acks && self.nodes[i].acks.insert(copy.id) {
                self.nodes[i].acks_version += 1;
            }
            self.log.push(
                now,
                EventKind::Delivered {
                    id: copy.id,
                    from: self.nodes[i].id,
                    to: dest.id,
                    tickets: copy.tickets,
                },
            );
        }
    }

    fn route_pair(&mut self, a: usize, b: usize, now: f64) {
        let scheme = self.cfg.scheme;
        let mut state = self.links.remove(&(a, b)).expect("matched pairs have links");
        let mut budget = state.link.contact.slot_budget(self.cfg.slot_s);
        let order = if state.link.pending_sender() == Some(self.nodes[b].id) {
            [(b, a), (a, b)]
        } else {
            [(a, b), (b, a)]
        };
        for (c, p) in order {
            if budget == 0 {
                break;
            }
            let plan = {
                let carrier = &self.nodes[c];
                let peer = &self.nodes[p];
                let ctx = EncounterContext {
                    carrier: carrier.view(),
                    peer: peer.view(),
                    destinations: &self.dest_positions,
                    now,
                    range: self.cfg.range_m,
                    window: self.cfg.window_s,
                };
                let ordered = transmission_order(scheme, carrier.buffer.iter(), now);
                decide(scheme, &ctx, &ordered)
            };
            {
                let (nc, np) = pair_mut(&mut self.nodes, c, p);
                for id in &plan.syncs {
                    if let (Some(x), Some(y)) = (nc.buffer.get_mut(*id), np.buffer.get_mut(*id)) {
                        // both copies exist, so the ids match
                        let _ = crate::messages::sync_thresholds(x, y);
                    }
                }
            }
            for action in state.link.transmit(plan.transfers, &mut budget) {
                self.apply_transfer(c, p, action, now);
            }
        }
        self.links.insert((a, b), state);
    }

    fn apply_transfer(&mut self, c: usize, p: usize, action: TransferAction, now: f64) {
        let (from, to) = (self.nodes[c].id, self.nodes[p].id);
        let id = action.message;
        if self.nodes[p].buffer.contains(id) {
            return;
        }
        let replica = {
            let Some(copy) = self.nodes[c].buffer.get_mut(id) else {
                return;
            };
            if let Some(t) = action.new_threshold_time {
                copy.lower_threshold_time(t);
            }
            if let Some(d) = action.new_threshold_dist {
                copy.lower_threshold_dist(d);
            }
            match action.mode {
                TransferMode::Replicate { tickets } => {
                    if tickets == 0 || tickets >= copy.tickets {
                        return;
                    }
                    copy.tickets -= tickets;
                    let mut r = copy.clone();
                    r.tickets = tickets;
                    r
                }
                TransferMode::ExtraCopy => {
                    let mut r = copy.clone();
                    r.tickets = 1;
                    r
                }
                TransferMode::Forward => self.nodes[c].buffer.remove(id).expect("copy present"),
                TransferMode::Deliver => return,
            }
        };
        let kind = match action.mode {
            TransferMode::Replicate { tickets } => EventKind::Replicated { id, from, to, tickets },
            TransferMode::ExtraCopy => EventKind::ExtraCopy { id, from, to },
            _ => EventKind::Forwarded { id, from, to },
        };
        self.log.push(now, kind);
        self.store(p, replica, now);
    }

    /// Inserts a copy at node `i`, evicting per policy to make room.
    fn store(&mut self, i: usize, mut copy: MessageCopy, now: f64) {
        let node = &mut self.nodes[i];
        if copy.hop_trace.last() != Some(&node.id) {
            copy.hop_trace.push(node.id);
        }
        for c in evict_for(&mut node.buffer, copy.size, now, self.policy) {
            self.log.push(
                now,
                EventKind::Evicted {
                    id: c.id,
                    node: node.id,
                    tickets: c.tickets,
                },
            );
        }
        node.buffer
            .insert(copy)
            .expect("eviction frees room and messages never exceed buffer capacity");
    }

    fn generate(&mut self, now: f64) {
        let eps = 1e-9 * self.cfg.slot_s;
        loop {
            let due = self.cfg.warmup_s + self.generation_round as f64 * self.cfg.generation_interval_s;
            if due > now + eps || due >= self.cfg.generation_end_s {
                break;
            }
            self.generation_round += 1;
            if self.nodes.is_empty() || self.dests.is_empty() {
                continue;
            }
            match self.cfg.generation {
                GenerationMode::Network => {
                    let src = self.traffic.random_range(0..self.nodes.len());
                    self.create_message(src, now);
                }
                GenerationMode::PerNode => {
                    for src in 0..self.nodes.len() {
                        self.create_message(src, now);
                    }
                }
            }
        }
    }

    fn create_message(&mut self, src: usize, now: f64) {
        let dest = self.dests[self.traffic.random_range(0..self.dests.len())].id;
        let id = MessageId(self.next_message);
        self.next_message += 1;
        let copy = MessageCopy::new(
            id,
            self.nodes[src].id,
            dest,
            self.cfg.message_bytes,
            now,
            self.cfg.ttl_s,
            self.cfg.copies,
        );
        self.log.push(
            now,
            EventKind::Created {
                id,
                source: copy.source,
                destination: dest,
                tickets: copy.tickets,
            },
        );
        self.store(src, copy, now);
    }
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = v.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

fn map_center(map: &MapGraph) -> Position {
    let pts = map.coordinates();
    let (mut lx, mut ly, mut hx, mut hy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        lx = lx.min(p.x);
        ly = ly.min(p.y);
        hx = hx.max(p.x);
        hy = hy.max(p.y);
    }
    Position::new((lx + hx) / 2.0, (ly + hy) / 2.0)
}

/// Runs a scenario from start to finish.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, EngineError> {
    let mut sim = Simulation::new(cfg.clone())?;
    sim.run_to_end()?;
    Ok(sim.finish())
}
