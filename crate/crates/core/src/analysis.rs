//! Closed-form delay and delivery estimates, Monte-Carlo meeting times, and
//! paired statistical comparisons between schemes.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::geometry::Position;
use crate::metrics::RunMetrics;
use crate::mobility::{rwp_initial, rwp_step, Bounds};
use crate::scenario::{MobilityConfig, ScenarioConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("relaying possibility of zero makes distribution time infinite")]
    DegenerateLambda,
    #[error("need at least {need} paired runs, got {got}")]
    InsufficientRuns { got: usize, need: usize },
    #[error("meeting-time estimation needs random-waypoint mobility")]
    NotRandomWaypoint,
}

/// Inputs of the closed-form model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    /// Nodes in the network.
    pub k: u32,
    /// Copy budget.
    pub l: u32,
    /// Expected meeting time, seconds.
    pub emt: f64,
    /// Relaying possibility.
    pub lambda: f64,
}

impl AnalyticParams {
    /// `emt = 0` is accepted as the always-in-contact limit.
    pub fn new(k: u32, l: u32, emt: f64, lambda: f64) -> Result<Self, AnalysisError> {
        let p = Self { k, l, emt, lambda };
        if l < 1 || k <= l {
            return Err(AnalysisError::InvalidParams(format!("need K > L >= 1 (K={k}, L={l})")));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(AnalysisError::InvalidParams(format!("lambda must be in [0, 1] (got {lambda})")));
        }
        if !(emt.is_finite() && emt >= 0.0) {
            return Err(AnalysisError::InvalidParams(format!("EMT must be >= 0 (got {emt})")));
        }
        Ok(p)
    }

    /// Parses `K=.. L=.. EMT=.. lambda=..`, separated by spaces or commas.
    /// `lambda` defaults to 1.
    pub fn parse(text: &str) -> Result<Self, AnalysisError> {
        let (mut k, mut l, mut emt, mut lambda) = (None, None, None, 1.0);
        for item in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let (key, val) = item
                .split_once('=')
                .ok_or_else(|| AnalysisError::InvalidParams(format!("expected key=value, got `{item}`")))?;
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| AnalysisError::InvalidParams(format!("`{key}` is not a number: `{v}`")))
            };
            match key.to_ascii_lowercase().as_str() {
                "k" => k = Some(num(val)? as u32),
                "l" => l = Some(num(val)? as u32),
                "emt" => emt = Some(num(val)?),
                "lambda" => lambda = num(val)?,
                other => return Err(AnalysisError::InvalidParams(format!("unknown key `{other}`"))),
            }
        }
        let missing = |n: &str| AnalysisError::InvalidParams(format!("missing `{n}`"));
        Self::new(k.ok_or_else(|| missing("K"))?, l.ok_or_else(|| missing("L"))?, emt.ok_or_else(|| missing("EMT"))?, lambda)
    }

    fn kf(&self) -> f64 {
        self.k as f64
    }

    /// Waiting-phase term `((K - L) / (K - 1)) * EMT / L`.
    fn wait_tail(&self) -> f64 {
        (self.kf() - self.l as f64) / (self.kf() - 1.0) * self.emt / self.l as f64
    }
}

/// Success probability of one relayed copy: `lambda * (1/(K-1))^2`, with
/// the last hop to the destination taken as certain.
pub fn relay_probability(p: &AnalyticParams) -> f64 {
    let q = 1.0 / (p.kf() - 1.0);
    p.lambda * q * q
}

/// `1 - (1 - P)^(L-1) * 1/(K-1)`: the source term multiplies the failure
/// of all relayed copies.
pub fn delivery_probability(p: &AnalyticParams) -> f64 {
    let pr = relay_probability(p);
    1.0 - (1.0 - pr).powi(p.l as i32 - 1) / (p.kf() - 1.0)
}

/// Alternative reading: the source meets the destination with probability
/// `1/(K-1)` independently of the `L-1` relayed copies,
/// `1 - (1 - P)^(L-1) * (1 - 1/(K-1))`.
pub fn delivery_probability_independent(p: &AnalyticParams) -> f64 {
    let pr = relay_probability(p);
    1.0 - (1.0 - pr).powi(p.l as i32 - 1) * (1.0 - 1.0 / (p.kf() - 1.0))
}

/// Source spray and wait: `sum_{H=1}^{L-1} EMT/(K-H) + ((K-L)/(K-1)) * EMT/L`.
pub fn delay_s_saw(p: &AnalyticParams) -> f64 {
    let spread: f64 = (1..p.l).map(|h| p.emt / (p.kf() - h as f64)).sum();
    spread + p.wait_tail()
}

/// Source spraying gated by relaying possibility `lambda`.
pub fn delay_s_tbgr(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    if p.lambda <= 0.0 {
        return Err(AnalysisError::DegenerateLambda);
    }
    let spread: f64 = (1..p.l).map(|h| p.emt / (p.lambda * (p.kf() - h as f64))).sum();
    Ok(spread + p.wait_tail())
}

/// Tree depth of binary spraying: `ceil(log2 L)`.
pub fn binary_depth(l: u32) -> u32 {
    if l <= 1 {
        0
    } else {
        32 - (l - 1).leading_zeros()
    }
}

/// Binary spraying: at depth `H`, `2^(H-1)` carriers look for fresh nodes.
pub fn delay_b_tbgr(p: &AnalyticParams) -> Result<f64, AnalysisError> {
    if p.lambda <= 0.0 {
        return Err(AnalysisError::DegenerateLambda);
    }
    let spread: f64 = (1..=binary_depth(p.l))
        .map(|h| {
            let carriers = 2f64.powi(h as i32 - 1);
            p.emt / (p.lambda * carriers * (p.kf() - carriers))
        })
        .sum();
    Ok(spread + p.wait_tail())
}

/// Plain-text table of every closed-form quantity.
pub fn analytic_table(p: &AnalyticParams) -> String {
    let fmt_res = |r: Result<f64, AnalysisError>| match r {
        Ok(v) => format!("{v:.6}"),
        Err(e) => format!("undefined ({e})"),
    };
    let mut out = String::new();
    let _ = writeln!(out, "K={} L={} EMT={} lambda={}", p.k, p.l, p.emt, p.lambda);
    let _ = writeln!(out, "{:<40} value", "quantity");
    let rows = [
        ("relay success probability", format!("{:.6}", relay_probability(p))),
        ("delivery probability", format!("{:.6}", delivery_probability(p))),
        ("delivery probability (independent source)", format!("{:.6}", delivery_probability_independent(p))),
        ("delay s-saw [s]", format!("{:.6}", delay_s_saw(p))),
        ("delay s-tbgr [s]", fmt_res(delay_s_tbgr(p))),
        ("delay b-tbgr [s]", fmt_res(delay_b_tbgr(p))),
        ("binary tree depth", binary_depth(p.l).to_string()),
    ];
    for (name, value) in rows {
        let _ = writeln!(out, "{name:<40} {value}");
    }
    out
}

/// Who the mobile node has to meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeetingTarget {
    /// Another random-waypoint node.
    Peer,
    /// A stationary point such as a destination.
    Fixed(Position),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmtEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Trials that hit the time cap; they count at the cap.
    pub censored: usize,
}

/// Trials longer than this are cut off and counted at the cap.
pub const EMT_TIME_CAP_S: f64 = 1.0e6;

/// Mean first-meeting time between two random-waypoint nodes (or a node
/// and a fixed point), over `samples` independently seeded trials. Nodes
/// move for the config's warm-up before the clock starts, so they begin
/// near the stationary spatial distribution.
pub fn estimate_emt_to(cfg: &ScenarioConfig, samples: usize, target: MeetingTarget) -> Result<EmtEstimate, AnalysisError> {
    let MobilityConfig::Rwp {
        width_m,
        height_m,
        speed_mps,
        wait_s,
    } = cfg.mobility
    else {
        return Err(AnalysisError::NotRandomWaypoint);
    };
    if samples == 0 {
        return Err(AnalysisError::InsufficientRuns { got: 0, need: 1 });
    }
    let bounds = Bounds {
        width: width_m,
        height: height_m,
    };
    let dt = cfg.slot_s;
    let range = cfg.range_m;
    let warm_steps = (cfg.warmup_s / dt).round() as u64;
    let cap_steps = (EMT_TIME_CAP_S / dt).ceil() as u64;
    let times: Vec<(f64, bool)> = (0..samples)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial as u64);
            let mut a = rwp_initial(bounds, speed_mps, &mut rng);
            let mut b = rwp_initial(bounds, speed_mps, &mut rng);
            let moving_peer = target == MeetingTarget::Peer;
            for _ in 0..warm_steps {
                rwp_step(&mut a, dt, bounds, speed_mps, wait_s, &mut rng);
                if moving_peer {
                    rwp_step(&mut b, dt, bounds, speed_mps, wait_s, &mut rng);
                }
            }
            let other = |b: &crate::mobility::MobilityState| match target {
                MeetingTarget::Peer => b.position,
                MeetingTarget::Fixed(p) => p,
            };
            if a.position.distance(other(&b)) <= range {
                return (0.0, false);
            }
            for step in 1..=cap_steps {
                rwp_step(&mut a, dt, bounds, speed_mps, wait_s, &mut rng);
                if moving_peer {
                    rwp_step(&mut b, dt, bounds, speed_mps, wait_s, &mut rng);
                }
                if a.position.distance(other(&b)) <= range {
                    return (step as f64 * dt, false);
                }
            }
            (cap_steps as f64 * dt, true)
        })
        .collect();
    let n = times.len() as f64;
    let mean = times.iter().map(|t| t.0).sum::<f64>() / n;
    let var = if times.len() > 1 {
        times.iter().map(|t| (t.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(EmtEstimate {
        mean,
        std_error: (var / n).sqrt(),
        samples: times.len(),
        censored: times.iter().filter(|t| t.1).count(),
    })
}

/// Mean first-meeting time between two mobile nodes.
pub fn estimate_emt(cfg: &ScenarioConfig, samples: usize) -> Result<EmtEstimate, AnalysisError> {
    estimate_emt_to(cfg, samples, MeetingTarget::Peer)
}

/// Mean with a two-sided 95% Student-t half width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub half_width: Option<f64>,
    pub n: usize,
}

fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

pub fn mean_ci(samples: &[f64]) -> Option<MeanCi> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let half_width = (n >= 2).then(|| {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        t_quantile_975(n - 1) * (var / n as f64).sqrt()
    });
    Some(MeanCi { mean, half_width, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    DeliveryRatio,
    Latency,
    Overhead,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::DeliveryRatio, Metric::Latency, Metric::Overhead];

    pub fn of(self, m: &RunMetrics) -> Option<f64> {
        match self {
            Metric::DeliveryRatio => m.delivery_ratio,
            Metric::Latency => m.avg_delivery_latency,
            Metric::Overhead => m.overhead_ratio,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::DeliveryRatio => "delivery_ratio",
            Metric::Latency => "avg_latency_s",
            Metric::Overhead => "overhead_ratio",
        }
    }
}

/// Expected sign of `first - second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Higher,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The 95% interval of the paired difference excludes zero on the
    /// expected side.
    Confirmed,
    NotSeparated,
    /// The interval excludes zero on the opposite side.
    Contradicted,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Confirmed => "confirmed",
            Verdict::NotSeparated => "not separated",
            Verdict::Contradicted => "contradicted",
        })
    }
}

/// Minimum number of pairs for a paired test.
pub const MIN_PAIRED_RUNS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    pub mean_first: f64,
    pub mean_second: f64,
    /// Mean of `first - second`.
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub expectation: Expectation,
    pub verdict: Verdict,
}

/// Paired t-interval on `first[i] - second[i]`.
pub fn paired_test(first: &[f64], second: &[f64], expectation: Expectation) -> Result<PairedComparison, AnalysisError> {
    let n = first.len().min(second.len());
    if n < MIN_PAIRED_RUNS || first.len() != second.len() {
        return Err(AnalysisError::InsufficientRuns {
            got: n,
            need: MIN_PAIRED_RUNS,
        });
    }
    let diffs: Vec<f64> = first.iter().zip(second).map(|(a, b)| a - b).collect();
    let ci = mean_ci(&diffs).expect("nonempty");
    let hw = ci.half_width.expect("n >= 2");
    let (lo, hi) = (ci.mean - hw, ci.mean + hw);
    let verdict = match expectation {
        Expectation::Higher if lo > 0.0 => Verdict::Confirmed,
        Expectation::Higher if hi < 0.0 => Verdict::Contradicted,
        Expectation::Lower if hi < 0.0 => Verdict::Confirmed,
        Expectation::Lower if lo > 0.0 => Verdict::Contradicted,
        _ => Verdict::NotSeparated,
    };
    Ok(PairedComparison {
        mean_first: first.iter().sum::<f64>() / n as f64,
        mean_second: second.iter().sum::<f64>() / n as f64,
        mean_diff: ci.mean,
        ci_low: lo,
        ci_high: hi,
        n,
        expectation,
        verdict,
    })
}

/// Per-seed metrics of one scheme.
pub type SchemeRuns = BTreeMap<u64, RunMetrics>;

/// Values of `metric` on the seeds where both schemes define it.
pub fn paired_samples(first: &SchemeRuns, second: &SchemeRuns, metric: Metric) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (seed, ma) in first {
        if let (Some(x), Some(y)) = (metric.of(ma), second.get(seed).and_then(|mb| metric.of(mb))) {
            a.push(x);
            b.push(y);
        }
    }
    (a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: String,
    pub metric: Metric,
    pub ci: Option<MeanCi>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingVerdict {
    pub first: String,
    pub second: String,
    pub metric: Metric,
    pub comparison: Result<PairedComparison, AnalysisError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub summaries: Vec<SchemeSummary>,
    pub orderings: Vec<OrderingVerdict>,
}

/// Summaries for every scheme and paired ordering tests between every two
/// schemes (in the given order) on every metric.
pub fn trend_test(runs: &[(String, SchemeRuns)]) -> Result<TrendReport, AnalysisError> {
    let mut summaries = Vec::new();
    for (scheme, r) in runs {
        for metric in Metric::ALL {
            let vals: Vec<f64> = r.values().filter_map(|m| metric.of(m)).collect();
            summaries.push(SchemeSummary {
                scheme: scheme.clone(),
                metric,
                ci: mean_ci(&vals),
            });
        }
    }
    let mut orderings = Vec::new();
    let mut any_tested = runs.len() < 2;
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            for metric in Metric::ALL {
                let (a, b) = paired_samples(&runs[i].1, &runs[j].1, metric);
                let comparison = paired_test(&a, &b, Expectation::Higher);
                any_tested |= comparison.is_ok();
                orderings.push(OrderingVerdict {
                    first: runs[i].0.clone(),
                    second: runs[j].0.clone(),
                    metric,
                    comparison,
                });
            }
        }
    }
    if !any_tested {
        let got = runs.iter().map(|(_, r)| r.len()).min().unwrap_or(0);
        return Err(AnalysisError::InsufficientRuns {
            got,
            need: MIN_PAIRED_RUNS,
        });
    }
    Ok(TrendReport { summaries, orderings })
}

impl TrendReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:<16} {:>14} {:>14} {:>4}", "scheme", "metric", "mean", "ci95", "n");
        for s in &self.summaries {
            let (mean, hw, n) = match s.ci {
                Some(c) => (
                    format!("{:.6}", c.mean),
                    c.half_width.map(|h| format!("{h:.6}")).unwrap_or_else(|| "-".into()),
                    c.n,
                ),
                None => ("-".into(), "-".into(), 0),
            };
            let _ = writeln!(out, "{:<10} {:<16} {:>14} {:>14} {:>4}", s.scheme, s.metric.name(), mean, hw, n);
        }
        let _ = writeln!(out);
        for o in &self.orderings {
            match &o.comparison {
                Ok(c) => {
                    let relation = match c.verdict {
                        Verdict::Confirmed => ">",
                        Verdict::Contradicted => "<",
                        Verdict::NotSeparated => "~",
                    };
                    let _ = writeln!(
                        out,
                        "{} {relation} {} on {}: diff {:.6} [{:.6}, {:.6}] n={}",
                        o.first,
                        o.second,
                        o.metric.name(),
                        c.mean_diff,
                        c.ci_low,
                        c.ci_high,
                        c.n
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{} ? {} on {}: {e}", o.first, o.second, o.metric.name());
                }
            }
        }
        out
    }
}
