//! Bidirectional flow aggregation keyed by the five-tuple.

mod key;
mod table;

pub use key::{CanonicalKey, Direction, FlowKey};
pub use table::{FlowEvent, FlowTable, Upsert, DEFAULT_ACTIVE_TIMEOUT_US, DEFAULT_IDLE_TIMEOUT_US};
