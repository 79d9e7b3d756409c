//! Per-flow state and the 43-feature flow record.

mod accumulator;
pub mod dns;
pub mod ftp;
mod l7;
mod record;
mod retrans;

pub use accumulator::{DirectionStats, FlowAccumulator, SIZE_BUCKET_LIMITS};
pub use dns::{parse_dns, DnsMessage};
pub use ftp::parse_ftp_response;
pub use l7::{L7Table, DEFAULT_L7_TABLE};
pub use record::{format_rate, FlowRecord, FEATURE_COLUMNS};
pub use retrans::SequenceTracker;
