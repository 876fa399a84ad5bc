//! Usage analytics: an append-only JSON-lines event log and the usage
//! report inferred from it.

pub mod event;
pub mod log;
pub mod report;

pub use event::{AnalyticsEvent, AppEvent, EventKind, Speaker};
pub use log::{parse_log, read_log, serialize_log, EventLog, LogError};
pub use report::{report, SessionMetrics, Thresholds, UsageReport};
