//! Flow metering and NIDS dataset construction.
//!
//! The crate turns classic pcap captures into bidirectional flow records
//! carrying 43 NetFlow v9 style features, labels them against ground-truth
//! attack events, and merges labelled datasets into a single corpus with
//! canonical attack categories.
//!
//! The stages compose as:
//!
//! ```text
//! pcap ──ingest──> PacketRecord ──flow::FlowTable──> FlowAccumulator
//!      ──finalize──> FlowRecord ──label──> LabelledFlow ──csv_io──> CSV
//!                                                        ──dataset──> merged / basic-12 / stats
//! ```
//!
//! Every stage is usable on its own; [`pipeline`] wires the first half
//! together with optional sharding across worker threads.

pub mod csv_io;
pub mod dataset;
pub mod error;
pub mod features;
pub mod flow;
pub mod ingest;
pub mod label;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FlowAccumulator, FlowRecord, L7Table};
pub use flow::{Direction, FlowKey, FlowTable};
pub use ingest::{Capture, PacketRecord};
pub use label::{Label, LabelIndex, LabelledFlow};
