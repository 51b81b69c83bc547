//! Per-encounter relay policies.
//!
//! Every scheme answers the same question: given a carrier, the peer it is
//! connected to this slot, and the carrier's messages, which copies move and
//! with how many tickets. Delivery to a destination is common to all schemes
//! and handled by [`deliveries`].
//!
//! Threshold conventions: an unset `threshold_time`/`threshold_dist`
//! compares as +infinity for relay tests, and the local-maximum test
//! (`threshold_time > remaining TTL`) is false while the threshold is unset.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contacts::{TransferAction, TransferMode};
use crate::geometry::{intersect_time, projected_distance, relative_angle, Position, RelativeAngle, Velocity};
use crate::messages::{message_utility, split_tickets, AckLedger, Buffer, EncounterSet, MessageCopy, MessageId, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown routing scheme `{0}` (expected one of dd, s-saw, b-saw, s-abgr, s-tbgr, b-tbgr, tbgr, tbhgr)")]
pub struct UnknownScheme(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scheme {
    /// Source carries every message to its destination.
    DirectDelivery,
    /// Source hands single-ticket copies to the first peers it meets.
    SourceSprayWait,
    /// Any holder of more than one ticket hands over half of them.
    BinarySprayWait,
    /// Single-ticket copies to peers with a better intersect time than the
    /// carrier, both heading towards the destination.
    SourceAbgr,
    /// Single-ticket copies gated by the cached best intersect time.
    SourceTbgr,
    /// Binary split gated by the cached best intersect time.
    BinaryTbgr,
    /// Binary threshold relay plus local-maximum replication.
    Tbgr,
    /// Visiting-preference aware two-phase relay with utility scheduling.
    Tbhgr,
}

impl Scheme {
    pub const ALL: [Scheme; 8] = [
        Scheme::DirectDelivery,
        Scheme::SourceSprayWait,
        Scheme::BinarySprayWait,
        Scheme::SourceAbgr,
        Scheme::SourceTbgr,
        Scheme::BinaryTbgr,
        Scheme::Tbgr,
        Scheme::Tbhgr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::DirectDelivery => "dd",
            Scheme::SourceSprayWait => "s-saw",
            Scheme::BinarySprayWait => "b-saw",
            Scheme::SourceAbgr => "s-abgr",
            Scheme::SourceTbgr => "s-tbgr",
            Scheme::BinaryTbgr => "b-tbgr",
            Scheme::Tbgr => "tbgr",
            Scheme::Tbhgr => "tbhgr",
        }
    }

    /// Whether copies cache and exchange delivery-time thresholds.
    pub fn uses_thresholds(self) -> bool {
        matches!(self, Scheme::SourceTbgr | Scheme::BinaryTbgr | Scheme::Tbgr | Scheme::Tbhgr)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = UnknownScheme;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| UnknownScheme(s.to_string()))
    }
}

impl TryFrom<String> for Scheme {
    type Error = UnknownScheme;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> Self {
        s.name().to_string()
    }
}

/// Read-only view of a node at slot start.
#[derive(Debug, Clone, Copy)]
pub struct NodeView<'a> {
    pub id: NodeId,
    pub position: Position,
    pub velocity: Velocity,
    pub encountered: &'a EncounterSet,
    pub acks: &'a AckLedger,
    pub buffer: &'a Buffer,
}

#[derive(Debug, Clone, Copy)]
pub struct EncounterContext<'a> {
    pub carrier: NodeView<'a>,
    pub peer: NodeView<'a>,
    pub destinations: &'a BTreeMap<NodeId, Position>,
    pub now: f64,
    pub range: f64,
    /// Projection window for the moving-away case, seconds.
    pub window: f64,
}

/// A node's motion relative to one destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Heading {
    pub dist: f64,
    pub speed: f64,
    /// `None` when the node is stationary or sits on the destination.
    pub phi: Option<RelativeAngle>,
}

impl Heading {
    pub fn of(position: Position, velocity: Velocity, dest: Position) -> Self {
        Heading {
            dist: position.distance(dest),
            speed: velocity.speed(),
            phi: relative_angle(position, velocity, dest).ok(),
        }
    }

    pub fn in_range(&self, range: f64) -> bool {
        self.dist <= range
    }

    /// Moving with `phi < pi/2`, or already inside the destination's range.
    pub fn approaching(&self, range: f64) -> bool {
        self.speed > 0.0 && (self.in_range(range) || self.phi.is_some_and(|p| p.is_approaching()))
    }

    /// Moving with `phi >= pi/2` from outside the destination's range.
    pub fn receding(&self, range: f64) -> bool {
        self.speed > 0.0 && !self.in_range(range) && self.phi.is_some_and(|p| !p.is_approaching())
    }

    /// Intersect-time metric; zero inside range, `None` when the node is
    /// stationary or not heading towards the destination.
    pub fn intersect_time(&self, range: f64) -> Option<f64> {
        if self.speed <= 0.0 {
            return None;
        }
        if self.in_range(range) {
            return Some(0.0);
        }
        intersect_time(self.dist, range, self.speed, self.phi?).ok()
    }

    /// Projected distance after `window` seconds of current motion.
    pub fn projected_distance(&self, window: f64, range: f64) -> f64 {
        let phi = self.phi.unwrap_or(RelativeAngle::from_radians(std::f64::consts::FRAC_PI_2));
        projected_distance(self.dist, window, self.speed, phi, range)
    }
}

impl<'a> EncounterContext<'a> {
    fn destination_of(&self, copy: &MessageCopy) -> Option<Position> {
        self.destinations.get(&copy.destination).copied()
    }

    pub fn carrier_heading(&self, copy: &MessageCopy) -> Option<Heading> {
        let d = self.destination_of(copy)?;
        Some(Heading::of(self.carrier.position, self.carrier.velocity, d))
    }

    pub fn peer_heading(&self, copy: &MessageCopy) -> Option<Heading> {
        let d = self.destination_of(copy)?;
        Some(Heading::of(self.peer.position, self.peer.velocity, d))
    }

    fn peer_met_destination(&self, copy: &MessageCopy) -> bool {
        self.peer.encountered.contains(copy.destination)
    }
}

/// Carrier's intersect time beats the peer's, both heading towards the
/// destination, both moving.
pub fn cond_abgr(ctx: &EncounterContext, copy: &MessageCopy) -> bool {
    let (Some(c), Some(p)) = (ctx.carrier_heading(copy), ctx.peer_heading(copy)) else {
        return false;
    };
    match (c.intersect_time(ctx.range), p.intersect_time(ctx.range)) {
        (Some(ti), Some(tj)) => ti > tj,
        _ => false,
    }
}

/// The peer's intersect time undercuts the cached threshold (`V_T > t_j`)
/// and the peer is heading towards the destination.
pub fn cond_tbgr_relay(ctx: &EncounterContext, copy: &MessageCopy) -> bool {
    peer_relay_time(ctx, copy).is_some()
}

/// Peer intersect time when it beats the cached threshold.
fn peer_relay_time(ctx: &EncounterContext, copy: &MessageCopy) -> Option<f64> {
    let tj = ctx.peer_heading(copy)?.intersect_time(ctx.range)?;
    (copy.time_threshold() > tj).then_some(tj)
}

/// Best known delivery time already exceeds the remaining lifetime.
pub fn cond_local_max(copy: &MessageCopy, now: f64) -> bool {
    copy.threshold_time.is_some_and(|vt| vt > copy.remaining_ttl(now))
}

fn replicate(ctx: &EncounterContext, copy: &MessageCopy, tickets: u32) -> TransferAction {
    TransferAction::new(
        copy.id,
        ctx.carrier.id,
        ctx.peer.id,
        TransferMode::Replicate { tickets },
        copy.size,
    )
}

fn half(copy: &MessageCopy) -> u32 {
    split_tickets(copy.tickets).map(|(give, _)| give).unwrap_or(0)
}

/// Phase one (copies with more than one ticket).
pub fn tbhgr_phase1(ctx: &EncounterContext, copy: &MessageCopy) -> Option<TransferAction> {
    let peer = ctx.peer_heading(copy)?;
    if copy.tickets <= 1 || peer.speed == 0.0 {
        return None;
    }
    if ctx.peer_met_destination(copy) {
        if let Some(tj) = peer_relay_time(ctx, copy) {
            return Some(replicate(ctx, copy, half(copy)).with_threshold_time(tj));
        }
    }
    if cond_local_max(copy, ctx.now) && peer.approaching(ctx.range) {
        return Some(replicate(ctx, copy, half(copy)));
    }
    if peer.receding(ctx.range) {
        let projected = peer.projected_distance(ctx.window, ctx.range);
        if copy.dist_threshold() > projected {
            return Some(replicate(ctx, copy, 1).with_threshold_dist(projected));
        }
    }
    None
}

/// Phase two (single-ticket copies).
pub fn tbhgr_phase2(ctx: &EncounterContext, copy: &MessageCopy) -> Option<TransferAction> {
    let peer = ctx.peer_heading(copy)?;
    if copy.tickets != 1 || peer.speed == 0.0 || !ctx.peer_met_destination(copy) {
        return None;
    }
    if let Some(tj) = peer_relay_time(ctx, copy) {
        let a = TransferAction::new(copy.id, ctx.carrier.id, ctx.peer.id, TransferMode::Forward, copy.size);
        return Some(a.with_threshold_time(tj));
    }
    if cond_local_max(copy, ctx.now) {
        return Some(TransferAction::new(
            copy.id,
            ctx.carrier.id,
            ctx.peer.id,
            TransferMode::ExtraCopy,
            copy.size,
        ));
    }
    None
}

fn relay(scheme: Scheme, ctx: &EncounterContext, copy: &MessageCopy) -> Option<TransferAction> {
    if scheme == Scheme::Tbhgr {
        return if copy.tickets > 1 {
            tbhgr_phase1(ctx, copy)
        } else {
            tbhgr_phase2(ctx, copy)
        };
    }
    if copy.tickets <= 1 {
        return None;
    }
    match scheme {
        Scheme::DirectDelivery | Scheme::Tbhgr => None,
        Scheme::SourceSprayWait => Some(replicate(ctx, copy, 1)),
        Scheme::BinarySprayWait => Some(replicate(ctx, copy, half(copy))),
        Scheme::SourceAbgr => cond_abgr(ctx, copy).then(|| replicate(ctx, copy, 1)),
        Scheme::SourceTbgr | Scheme::BinaryTbgr | Scheme::Tbgr => {
            if ctx.peer_heading(copy)?.speed == 0.0 {
                return None;
            }
            let give = if scheme == Scheme::SourceTbgr { 1 } else { half(copy) };
            if let Some(tj) = peer_relay_time(ctx, copy) {
                Some(replicate(ctx, copy, give).with_threshold_time(tj))
            } else if scheme == Scheme::Tbgr && cond_local_max(copy, ctx.now) {
                Some(replicate(ctx, copy, give))
            } else {
                None
            }
        }
    }
}

/// Outcome of one directed encounter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Plan {
    /// Transfers in transmission order.
    pub transfers: Vec<TransferAction>,
    /// Messages both nodes hold whose thresholds should be merged.
    pub syncs: Vec<MessageId>,
}

/// Relay decisions for `carried` (already in transmission order) from the
/// context's carrier to its peer.
pub fn decide(scheme: Scheme, ctx: &EncounterContext, carried: &[&MessageCopy]) -> Plan {
    let mut plan = Plan::default();
    for copy in carried {
        if copy.is_expired(ctx.now) || ctx.carrier.acks.contains(copy.id) || copy.destination == ctx.peer.id {
            continue;
        }
        if ctx.peer.buffer.contains(copy.id) {
            if scheme.uses_thresholds() {
                plan.syncs.push(copy.id);
            }
            continue;
        }
        if ctx.peer.acks.contains(copy.id) {
            continue;
        }
        if let Some(action) = relay(scheme, ctx, copy) {
            plan.transfers.push(action);
        }
    }
    plan
}

/// Scheduling order for a node's buffer: descending utility for the
/// utility-aware scheme, creation order for the rest. Ties go to the older
/// message.
pub fn transmission_order<'b>(scheme: Scheme, carried: impl IntoIterator<Item = &'b MessageCopy>, now: f64) -> Vec<&'b MessageCopy> {
    let mut v: Vec<&MessageCopy> = carried.into_iter().collect();
    if scheme == Scheme::Tbhgr {
        let mut keyed: Vec<(f64, &MessageCopy)> = v
            .into_iter()
            .map(|c| (message_utility(c, now).unwrap_or(0.0), c))
            .collect();
        keyed.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then(a.1.created_at.total_cmp(&b.1.created_at))
                .then(a.1.id.cmp(&b.1.id))
        });
        keyed.into_iter().map(|(_, c)| c).collect()
    } else {
        v.sort_by(|a, b| a.created_at.total_cmp(&b.created_at).then(a.id.cmp(&b.id)));
        v
    }
}

/// Messages `carrier` should hand to `destination`, in transmission order.
/// Messages the destination already received are skipped.
pub fn deliveries(
    scheme: Scheme,
    carrier: NodeId,
    buffer: &Buffer,
    destination: NodeId,
    received: &AckLedger,
    now: f64,
) -> Vec<TransferAction> {
    let mine = buffer
        .iter()
        .filter(|c| c.destination == destination && !c.is_expired(now) && !received.contains(c.id));
    transmission_order(scheme, mine, now)
        .into_iter()
        .map(|c| TransferAction::new(c.id, carrier, destination, TransferMode::Deliver, c.size))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    const DEST: NodeId = NodeId(100);

    struct Fixture {
        carrier_buf: Buffer,
        peer_buf: Buffer,
        carrier_met: EncounterSet,
        peer_met: EncounterSet,
        acks: AckLedger,
        dests: BTreeMap<NodeId, Position>,
    }

    impl Fixture {
        fn new() -> Self {
            let mut dests = BTreeMap::new();
            dests.insert(DEST, Position::new(0.0, 0.0));
            Self {
                carrier_buf: Buffer::new(u64::MAX),
                peer_buf: Buffer::new(u64::MAX),
                carrier_met: EncounterSet::new(),
                peer_met: EncounterSet::new(),
                acks: AckLedger::new(),
                dests,
            }
        }

        fn ctx(&self, carrier: (Position, Velocity), peer: (Position, Velocity), now: f64) -> EncounterContext<'_> {
            EncounterContext {
                carrier: NodeView {
                    id: NodeId(1),
                    position: carrier.0,
                    velocity: carrier.1,
                    encountered: &self.carrier_met,
                    acks: &self.acks,
                    buffer: &self.carrier_buf,
                },
                peer: NodeView {
                    id: NodeId(2),
                    position: peer.0,
                    velocity: peer.1,
                    encountered: &self.peer_met,
                    acks: &self.acks,
                    buffer: &self.peer_buf,
                },
                destinations: &self.dests,
                now,
                range: 10.0,
                window: 5.0,
            }
        }
    }

    /// Node `dist` meters from the origin destination, moving at `speed` with
    /// heading angle `phi` to it.
    fn node(dist: f64, speed: f64, phi: f64) -> (Position, Velocity) {
        // destination lies in -x direction from (dist, 0)
        let dir = PI - phi;
        (Position::new(dist, 0.0), Velocity::new(speed * dir.cos(), speed * dir.sin()))
    }

    fn msg(tickets: u32) -> MessageCopy {
        MessageCopy::new(MessageId(7), NodeId(1), DEST, 1000, 0.0, 3600.0, tickets)
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("epidemic".parse::<Scheme>().is_err());
    }

    #[test]
    fn dd_never_relays() {
        let f = Fixture::new();
        let m = msg(8);
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(100.0, 5.0, 0.0), 0.0);
        assert_eq!(decide(Scheme::DirectDelivery, &ctx, &[&m]), Plan::default());
    }

    #[test]
    fn tbgr_peer_holding_copy_only_syncs() {
        let mut f = Fixture::new();
        f.peer_buf.insert(msg(1)).unwrap();
        let m = msg(4);
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(100.0, 5.0, 0.0), 0.0);
        let plan = decide(Scheme::Tbgr, &ctx, &[&m]);
        assert!(plan.transfers.is_empty());
        assert_eq!(plan.syncs, vec![MessageId(7)]);
    }

    #[test]
    fn tbgr_relay_example() {
        let f = Fixture::new();
        let m = msg(4);
        let ctx = f.ctx(node(300.0, 5.0, PI), node(100.0, 5.0, FRAC_PI_4), 0.0);
        let plan = decide(Scheme::Tbgr, &ctx, &[&m]);
        assert_eq!(plan.transfers.len(), 1);
        let a = &plan.transfers[0];
        assert_eq!(a.mode, TransferMode::Replicate { tickets: 2 });
        let expected = 25.455_844_122_715_71;
        let got = a.new_threshold_time.unwrap();
        assert!((got - expected).abs() / expected < 1e-9, "{got}");
    }

    #[test]
    fn abgr_conditions() {
        let f = Fixture::new();
        let m = msg(8);
        // carrier 210 m at 5 m/s straight on: 40 s; peer 110 m: 20 s
        let ctx = f.ctx(node(210.0, 5.0, 0.0), node(110.0, 5.0, 0.0), 0.0);
        assert!(cond_abgr(&ctx, &m));
        let ctx = f.ctx(node(210.0, 5.0, 2.0), node(110.0, 5.0, 0.0), 0.0);
        assert!(!cond_abgr(&ctx, &m));
        let ctx = f.ctx((Position::new(210.0, 0.0), Velocity::ZERO), node(110.0, 5.0, 0.0), 0.0);
        assert!(!cond_abgr(&ctx, &m));
    }

    #[test]
    fn tbgr_relay_conditions() {
        let f = Fixture::new();
        let mut m = msg(8);
        let ctx = f.ctx(node(210.0, 5.0, PI), node(110.0, 5.0, 1.0), 0.0);
        assert!(cond_tbgr_relay(&ctx, &m));
        // peer intersect time 25 s vs threshold 20 s
        m.threshold_time = Some(20.0);
        let ctx = f.ctx(node(210.0, 5.0, 0.0), node(135.0, 5.0, 0.0), 0.0);
        assert!(!cond_tbgr_relay(&ctx, &m));
        m.threshold_time = None;
        let ctx = f.ctx(node(210.0, 5.0, 0.0), node(135.0, 5.0, std::f64::consts::FRAC_PI_2), 0.0);
        assert!(!cond_tbgr_relay(&ctx, &m));
    }

    #[test]
    fn local_max_conditions() {
        let mut m = msg(8);
        m.ttl_initial = 3600.0;
        m.threshold_time = Some(4000.0);
        assert!(cond_local_max(&m, 600.0));
        m.threshold_time = Some(100.0);
        assert!(!cond_local_max(&m, 600.0));
        m.threshold_time = None;
        assert!(!cond_local_max(&m, 600.0));
    }

    #[test]
    fn phase1_branches() {
        let mut f = Fixture::new();
        f.peer_met.record(DEST);
        let m = msg(12);
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(100.0, 5.0, 0.3), 0.0);
        let a = tbhgr_phase1(&ctx, &m).unwrap();
        assert_eq!(a.mode, TransferMode::Replicate { tickets: 6 });

        // moving away, no distance threshold yet
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(200.0, 4.0, 3.0 * FRAC_PI_4), 0.0);
        let a = tbhgr_phase1(&ctx, &m).unwrap();
        assert_eq!(a.mode, TransferMode::Replicate { tickets: 1 });
        let expected = 200.0 - 5.0 * (3.0 * FRAC_PI_4).cos() * 4.0 - 10.0;
        assert!((a.new_threshold_dist.unwrap() - expected).abs() < 1e-9);

        // threshold 150 m already better than the 180+ m projection
        let mut m2 = msg(12);
        m2.threshold_dist = Some(150.0);
        assert!(tbhgr_phase1(&ctx, &m2).is_none());
    }

    #[test]
    fn phase1_local_max_ignores_visiting_preference() {
        let f = Fixture::new();
        let mut m = msg(6);
        m.threshold_time = Some(10.0);
        // 3590 s elapsed: 10 s threshold exceeds the 10 s - epsilon remaining
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(400.0, 5.0, 0.2), 3590.5);
        let a = tbhgr_phase1(&ctx, &m).unwrap();
        assert_eq!(a.mode, TransferMode::Replicate { tickets: 3 });
        assert!(a.new_threshold_time.is_none());
    }

    #[test]
    fn phase2_branches() {
        let mut f = Fixture::new();
        let m = msg(1);
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(100.0, 5.0, 0.0), 0.0);
        // peer never met the destination
        assert!(tbhgr_phase2(&ctx, &m).is_none());

        f.peer_met.record(DEST);
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(100.0, 5.0, 0.0), 0.0);
        assert_eq!(tbhgr_phase2(&ctx, &m).unwrap().mode, TransferMode::Forward);

        // moving away never forwards a single-ticket copy
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(100.0, 5.0, 2.5), 0.0);
        assert!(tbhgr_phase2(&ctx, &m).is_none());

        let mut late = msg(1);
        late.threshold_time = Some(100.0);
        let ctx = f.ctx(node(300.0, 5.0, 0.0), node(100.0, 5.0, 2.5), 3550.0);
        assert_eq!(tbhgr_phase2(&ctx, &late).unwrap().mode, TransferMode::ExtraCopy);
    }

    #[test]
    fn stationary_peer_never_receives() {
        let mut f = Fixture::new();
        f.peer_met.record(DEST);
        let m = msg(8);
        let ctx = f.ctx(node(300.0, 5.0, 0.0), (Position::new(100.0, 0.0), Velocity::ZERO), 0.0);
        for s in [Scheme::SourceAbgr, Scheme::SourceTbgr, Scheme::BinaryTbgr, Scheme::Tbgr, Scheme::Tbhgr] {
            assert!(decide(s, &ctx, &[&m]).transfers.is_empty(), "{s}");
        }
        assert_eq!(decide(Scheme::SourceSprayWait, &ctx, &[&m]).transfers.len(), 1);
    }

    #[test]
    fn ordering_examples() {
        let mk = |id: u32, created: f64, vt: f64| {
            let mut c = MessageCopy::new(MessageId(id), NodeId(1), DEST, 10, created, 1000.0, 1);
            c.threshold_time = Some(vt);
            c
        };
        // utilities 0.2, 0.9, 0.5 at now = 0
        let a = mk(1, 0.0, 800.0);
        let b = mk(2, 0.0, 100.0);
        let c = mk(3, 0.0, 500.0);
        let order = transmission_order(Scheme::Tbhgr, [&a, &b, &c], 0.0);
        assert_eq!(order.iter().map(|m| m.id.0).collect::<Vec<_>>(), vec![2, 3, 1]);

        let older = mk(4, 0.0, 500.0);
        let newer = mk(5, 0.0, 500.0);
        let order = transmission_order(Scheme::Tbhgr, [&newer, &older], 0.0);
        assert_eq!(order[0].id.0, 4);

        let x = mk(6, 30.0, 0.0);
        let y = mk(7, 10.0, 999.0);
        let order = transmission_order(Scheme::SourceSprayWait, [&x, &y], 40.0);
        assert_eq!(order.iter().map(|m| m.id.0).collect::<Vec<_>>(), vec![7, 6]);
    }

    #[test]
    fn deliveries_skip_received() {
        let mut buf = Buffer::new(u64::MAX);
        buf.insert(msg(3)).unwrap();
        let mut other = msg(1);
        other.id = MessageId(8);
        buf.insert(other).unwrap();
        let mut received = AckLedger::new();
        let d = deliveries(Scheme::Tbgr, NodeId(1), &buf, DEST, &received, 10.0);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|a| a.mode == TransferMode::Deliver && a.to == DEST));
        received.insert(MessageId(7));
        let d = deliveries(Scheme::Tbgr, NodeId(1), &buf, DEST, &received, 10.0);
        assert_eq!(d.len(), 1);
        assert!(deliveries(Scheme::Tbgr, NodeId(1), &buf, NodeId(3), &AckLedger::new(), 10.0).is_empty());
    }
}
