//! Delivery ratio, latency and overhead computed from an event log.

use std::collections::BTreeMap;
use std::io;

use thiserror::Error;

use crate::events::{EventKind, EventLog};
use crate::messages::MessageId;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no messages were generated")]
    NoMessages,
    #[error("no message was delivered")]
    NothingDelivered,
}

/// Column order of per-run CSV files.
pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "seed",
    "generated",
    "delivered",
    "delivery_ratio",
    "avg_latency_s",
    "transmissions",
    "overhead_ratio",
    "extra_copies",
    "evictions",
    "expiries",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub generated: u64,
    pub delivered: u64,
    pub total_transmissions: u64,
    /// `None` when nothing was generated.
    pub delivery_ratio: Option<f64>,
    /// `None` when nothing was delivered.
    pub avg_delivery_latency: Option<f64>,
    /// `None` when nothing was delivered.
    pub overhead_ratio: Option<f64>,
    pub extra_copies: u64,
    pub evictions: u64,
    pub expiries: u64,
}

struct Tally {
    created: BTreeMap<MessageId, f64>,
    first_delivery: BTreeMap<MessageId, f64>,
    transmissions: u64,
    extra_copies: u64,
    evictions: u64,
    expiries: u64,
}

fn tally(log: &EventLog) -> Tally {
    let mut t = Tally {
        created: BTreeMap::new(),
        first_delivery: BTreeMap::new(),
        transmissions: 0,
        extra_copies: 0,
        evictions: 0,
        expiries: 0,
    };
    for e in log.events() {
        if e.kind.is_transmission() {
            t.transmissions += 1;
        }
        match e.kind {
            EventKind::Created { id, .. } => {
                t.created.insert(id, e.time);
            }
            EventKind::Delivered { id, .. } => {
                t.first_delivery.entry(id).or_insert(e.time);
            }
            EventKind::ExtraCopy { .. } => t.extra_copies += 1,
            EventKind::Evicted { .. } => t.evictions += 1,
            EventKind::Expired { .. } => t.expiries += 1,
            _ => {}
        }
    }
    t
}

fn mean_latency(t: &Tally) -> Option<f64> {
    if t.first_delivery.is_empty() {
        return None;
    }
    let sum: f64 = t
        .first_delivery
        .iter()
        .map(|(id, at)| at - t.created.get(id).copied().unwrap_or(*at))
        .sum();
    Some(sum / t.first_delivery.len() as f64)
}

/// Unique delivered ids over generated messages.
pub fn delivery_ratio(log: &EventLog) -> Result<f64, MetricsError> {
    let t = tally(log);
    if t.created.is_empty() {
        return Err(MetricsError::NoMessages);
    }
    Ok(t.first_delivery.len() as f64 / t.created.len() as f64)
}

/// Mean time from creation to first delivery.
pub fn avg_latency(log: &EventLog) -> Result<f64, MetricsError> {
    mean_latency(&tally(log)).ok_or(MetricsError::NothingDelivered)
}

/// Transfers that were not the first delivery of a message, per delivered
/// message.
pub fn overhead_ratio(log: &EventLog) -> Result<f64, MetricsError> {
    let t = tally(log);
    let d = t.first_delivery.len() as u64;
    if d == 0 {
        return Err(MetricsError::NothingDelivered);
    }
    Ok((t.transmissions - d) as f64 / d as f64)
}

impl RunMetrics {
    pub fn from_log(log: &EventLog) -> Self {
        let t = tally(log);
        let generated = t.created.len() as u64;
        let delivered = t.first_delivery.len() as u64;
        Self {
            generated,
            delivered,
            total_transmissions: t.transmissions,
            delivery_ratio: (generated > 0).then(|| delivered as f64 / generated as f64),
            avg_delivery_latency: mean_latency(&t),
            overhead_ratio: (delivered > 0).then(|| (t.transmissions - delivered) as f64 / delivered as f64),
            extra_copies: t.extra_copies,
            evictions: t.evictions,
            expiries: t.expiries,
        }
    }

    /// CSV fields after `scheme` and `seed`, undefined values left empty.
    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![
            self.generated.to_string(),
            self.delivered.to_string(),
            opt(self.delivery_ratio),
            opt(self.avg_delivery_latency),
            self.total_transmissions.to_string(),
            opt(self.overhead_ratio),
            self.extra_copies.to_string(),
            self.evictions.to_string(),
            self.expiries.to_string(),
        ]
    }
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scheme: String,
    pub seed: u64,
    pub metrics: RunMetrics,
}

pub fn write_csv<W: io::Write>(out: W, rows: &[MetricsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let mut rec = vec![row.scheme.clone(), row.seed.to_string()];
        rec.extend(row.metrics.csv_fields());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum CsvReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Field { row: usize, msg: String },
}

/// Reads rows written by [`write_csv`].
pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<MetricsRow>, CsvReadError> {
    let mut r = csv::Reader::from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(CsvReadError::Field {
            row: 0,
            msg: "unexpected header".into(),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |col: &str| CsvReadError::Field {
            row: i + 1,
            msg: format!("bad `{col}`"),
        };
        let int = |k: usize| rec[k].parse::<u64>().map_err(|_| bad(CSV_HEADER[k]));
        let opt = |k: usize| -> Result<Option<f64>, CsvReadError> {
            if rec[k].is_empty() {
                Ok(None)
            } else {
                rec[k].parse::<f64>().map(Some).map_err(|_| bad(CSV_HEADER[k]))
            }
        };
        rows.push(MetricsRow {
            scheme: rec[0].to_string(),
            seed: int(1)?,
            metrics: RunMetrics {
                generated: int(2)?,
                delivered: int(3)?,
                delivery_ratio: opt(4)?,
                avg_delivery_latency: opt(5)?,
                total_transmissions: int(6)?,
                overhead_ratio: opt(7)?,
                extra_copies: int(8)?,
                evictions: int(9)?,
                expiries: int(10)?,
            },
        });
    }
    Ok(rows)
}
