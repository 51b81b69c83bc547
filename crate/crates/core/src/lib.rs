//! Geographic multi-copy routing for delay tolerant networks.
//!
//! The crate holds the routing decisions (spray-and-wait baselines and the
//! geographic intersect-time schemes), the mobility models they are
//! evaluated under, a slotted simulator, closed-form delay estimates and
//! the metrics/sweep pipeline.

pub mod analysis;
pub mod contacts;
pub mod engine;
pub mod events;
pub mod geometry;
pub mod messages;
pub mod metrics;
pub mod mobility;
pub mod routing;
pub mod scenario;
pub mod sweep;

pub use analysis::{AnalyticParams, EmtEstimate, TrendReport};
pub use contacts::{Contact, TransferAction, TransferMode};
pub use engine::{run, RunOutput, Simulation};
pub use events::{Event, EventKind, EventLog};
pub use geometry::{Position, RelativeAngle, Velocity};
pub use messages::{AckLedger, Buffer, EncounterSet, MessageCopy, MessageId, NodeId};
pub use metrics::RunMetrics;
pub use mobility::{MapGraph, MobilityState, PoiProfile, UniformRange};
pub use routing::Scheme;
pub use scenario::{load_config, ConfigError, ScenarioConfig};
pub use sweep::{run_sweep, SweepSpec};
