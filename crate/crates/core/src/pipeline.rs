//! Capture-to-flow extraction, optionally sharded across worker threads.
//!
//! Packets are routed to a shard by a hash of their direction-independent
//! five-tuple, so every flow lives entirely inside one shard. Every
//! [`ExtractConfig::tick_every`] packets each shard receives the highest
//! timestamp seen so far and exports the flows that have timed out by then.
//! Because shards see the same ticks at the same stream positions whatever
//! the worker count, the output does not depend on it.

use std::path::{Path, PathBuf};
use std::sync::mpsc;

use crate::error::{Error, Result};
use crate::features::{FlowAccumulator, FlowRecord, L7Table};
use crate::flow::{CanonicalKey, FlowKey, FlowTable, DEFAULT_ACTIVE_TIMEOUT_US, DEFAULT_IDLE_TIMEOUT_US};
use crate::ingest::{Capture, IngestStats, PacketRecord};
use crate::label::{label_flow_at, LabelIndex, LabelSummary, LabelledFlow, TimeSpan};

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub idle_timeout_us: u64,
    pub active_timeout_us: u64,
    pub workers: usize,
    pub tick_every: usize,
    pub l7: L7Table,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            idle_timeout_us: DEFAULT_IDLE_TIMEOUT_US,
            active_timeout_us: DEFAULT_ACTIVE_TIMEOUT_US,
            workers: 1,
            tick_every: 10_000,
            l7: L7Table::default(),
        }
    }
}

impl ExtractConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_timeouts(mut self, idle_us: u64, active_us: u64) -> Self {
        self.idle_timeout_us = idle_us;
        self.active_timeout_us = active_us;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.idle_timeout_us == 0 || self.active_timeout_us == 0 {
            return Err(Error::Config("timeouts must be positive".into()));
        }
        if self.tick_every == 0 {
            return Err(Error::Config("tick interval must be positive".into()));
        }
        Ok(())
    }
}

/// A finalized flow with the key and time span it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedFlow {
    pub key: FlowKey,
    pub first_seen_us: u64,
    pub last_seen_us: u64,
    pub record: FlowRecord,
}

impl ExtractedFlow {
    pub fn span(&self) -> TimeSpan {
        TimeSpan {
            start_us: self.first_seen_us,
            end_us: self.last_seen_us,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    /// Ordered by first packet time, then flow key.
    pub flows: Vec<ExtractedFlow>,
    pub stats: IngestStats,
    /// Captures that ended mid-record, with the records read before the cut.
    pub truncated: Vec<(PathBuf, u64)>,
}

impl Extraction {
    pub fn records(&self) -> impl Iterator<Item = &FlowRecord> {
        self.flows.iter().map(|f| &f.record)
    }

    pub fn into_records(self) -> Vec<FlowRecord> {
        self.flows.into_iter().map(|f| f.record).collect()
    }
}

enum Msg {
    Packet(PacketRecord),
    Tick(u64),
}

struct Shard<'a> {
    table: FlowTable,
    l7: &'a L7Table,
    out: Vec<ExtractedFlow>,
}

impl<'a> Shard<'a> {
    fn new(config: &'a ExtractConfig) -> Self {
        Shard {
            table: FlowTable::new(config.idle_timeout_us, config.active_timeout_us),
            l7: &config.l7,
            out: Vec::new(),
        }
    }

    fn emit(&mut self, flows: Vec<FlowAccumulator>) -> Result<()> {
        for acc in flows {
            self.out.push(ExtractedFlow {
                key: *acc.key(),
                first_seen_us: acc.first_seen_us(),
                last_seen_us: acc.last_seen_us(),
                record: acc.finalize(self.l7)?,
            });
        }
        Ok(())
    }

    fn handle(&mut self, msg: Msg) -> Result<()> {
        match msg {
            Msg::Packet(pkt) => {
                self.table.upsert(&pkt);
                Ok(())
            }
            Msg::Tick(now) => {
                let due = self.table.expire_flows(now);
                self.emit(due)
            }
        }
    }

    fn finish(mut self) -> Result<Vec<ExtractedFlow>> {
        let rest = self.table.flush();
        self.emit(rest)?;
        Ok(self.out)
    }
}

/// Receives packets from a source and distributes them to shards.
trait Router {
    fn send(&mut self, shard: usize, msg: Msg);
}

struct Feeder<'r> {
    router: &'r mut dyn Router,
    shards: usize,
    tick_every: usize,
    since_tick: usize,
    max_ts: u64,
}

impl Feeder<'_> {
    fn push(&mut self, pkt: PacketRecord) {
        self.max_ts = self.max_ts.max(pkt.timestamp_us);
        let shard = (CanonicalKey::of(&pkt).shard_hash() % self.shards as u64) as usize;
        self.router.send(shard, Msg::Packet(pkt));
        self.since_tick += 1;
        if self.since_tick == self.tick_every {
            self.since_tick = 0;
            for s in 0..self.shards {
                self.router.send(s, Msg::Tick(self.max_ts));
            }
        }
    }
}

struct Inline<'a> {
    shard: Shard<'a>,
    error: Option<Error>,
}

impl Router for Inline<'_> {
    fn send(&mut self, _shard: usize, msg: Msg) {
        if self.error.is_none() {
            if let Err(e) = self.shard.handle(msg) {
                self.error = Some(e);
            }
        }
    }
}

const BATCH: usize = 512;

struct Channels {
    senders: Vec<mpsc::SyncSender<Vec<Msg>>>,
    batches: Vec<Vec<Msg>>,
}

impl Channels {
    fn flush(&mut self, shard: usize) {
        let batch = std::mem::replace(&mut self.batches[shard], Vec::with_capacity(BATCH));
        // A send only fails once the worker has stopped on an error, which
        // its join result reports.
        let _ = self.senders[shard].send(batch);
    }
}

impl Router for Channels {
    fn send(&mut self, shard: usize, msg: Msg) {
        self.batches[shard].push(msg);
        if self.batches[shard].len() >= BATCH {
            self.flush(shard);
        }
    }
}

fn sort_flows(flows: &mut [ExtractedFlow]) {
    flows.sort_by(|a, b| (a.first_seen_us, a.key).cmp(&(b.first_seen_us, b.key)));
}

/// Runs `feed` as the packet source and returns the finalized flows.
fn run<T>(
    config: &ExtractConfig,
    feed: impl FnOnce(&mut dyn FnMut(PacketRecord)) -> Result<T>,
) -> Result<(Vec<ExtractedFlow>, T)> {
    config.validate()?;
    if config.workers == 1 {
        let mut inline = Inline {
            shard: Shard::new(config),
            error: None,
        };
        let fed = {
            let mut feeder = Feeder {
                router: &mut inline,
                shards: 1,
                tick_every: config.tick_every,
                since_tick: 0,
                max_ts: 0,
            };
            feed(&mut |pkt| feeder.push(pkt))?
        };
        if let Some(e) = inline.error {
            return Err(e);
        }
        let mut flows = inline.shard.finish()?;
        sort_flows(&mut flows);
        return Ok((flows, fed));
    }

    std::thread::scope(|scope| {
        let mut senders = Vec::with_capacity(config.workers);
        let mut handles = Vec::with_capacity(config.workers);
        for _ in 0..config.workers {
            let (tx, rx) = mpsc::sync_channel::<Vec<Msg>>(8);
            senders.push(tx);
            handles.push(scope.spawn(move || -> Result<Vec<ExtractedFlow>> {
                let mut shard = Shard::new(config);
                for batch in rx {
                    for msg in batch {
                        shard.handle(msg)?;
                    }
                }
                shard.finish()
            }));
        }
        let mut channels = Channels {
            senders,
            batches: (0..config.workers).map(|_| Vec::with_capacity(BATCH)).collect(),
        };
        let fed = {
            let mut feeder = Feeder {
                router: &mut channels,
                shards: config.workers,
                tick_every: config.tick_every,
                since_tick: 0,
                max_ts: 0,
            };
            feed(&mut |pkt| feeder.push(pkt))
        };
        for shard in 0..config.workers {
            channels.flush(shard);
        }
        drop(channels);
        let mut flows = Vec::new();
        let mut failure = None;
        for handle in handles {
            match handle.join().expect("flow worker panicked") {
                Ok(out) => flows.extend(out),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        let fed = fed?;
        if let Some(e) = failure {
            return Err(e);
        }
        sort_flows(&mut flows);
        Ok((flows, fed))
    })
}

/// Builds flows from an in-memory packet sequence.
pub fn extract_packets<I>(packets: I, config: &ExtractConfig) -> Result<Vec<ExtractedFlow>>
where
    I: IntoIterator<Item = PacketRecord>,
{
    let (flows, ()) = run(config, |sink| {
        packets.into_iter().for_each(|p| sink(p));
        Ok(())
    })?;
    Ok(flows)
}

/// Builds flows from capture files read back to back as one packet stream.
///
/// A capture that ends mid-record keeps the packets before the cut and is
/// reported in [`Extraction::truncated`]; any other read error is fatal.
pub fn extract_files<P: AsRef<Path>>(paths: &[P], config: &ExtractConfig) -> Result<Extraction> {
    let (flows, (stats, truncated)) = run(config, |sink| {
        let mut stats = IngestStats::default();
        let mut truncated = Vec::new();
        for path in paths {
            let path = path.as_ref();
            let mut packets = Capture::open(path)?.packets();
            for pkt in packets.by_ref() {
                match pkt {
                    Ok(pkt) => sink(pkt),
                    Err(Error::TruncatedFile { packets }) => {
                        truncated.push((path.to_path_buf(), packets));
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            stats.merge(packets.stats());
        }
        Ok((stats, truncated))
    })?;
    Ok(Extraction {
        flows,
        stats,
        truncated,
    })
}

/// Labels extracted flows, using their time spans for windowed events.
pub fn label_extracted<I>(flows: I, index: &LabelIndex) -> (Vec<LabelledFlow>, LabelSummary)
where
    I: IntoIterator<Item = ExtractedFlow>,
{
    let mut summary = LabelSummary {
        skipped_events: index.skipped().to_vec(),
        ..Default::default()
    };
    let labelled = flows
        .into_iter()
        .map(|flow| {
            let span = flow.span();
            let labelled = label_flow_at(index, flow.record, Some(span));
            summary.add(&labelled.label);
            labelled
        })
        .collect();
    (labelled, summary)
}
