use std::collections::hash_map::Entry;
use std::collections::HashMap;

use super::key::{CanonicalKey, Direction, FlowKey};
use crate::features::FlowAccumulator;
use crate::ingest::PacketRecord;

pub const DEFAULT_IDLE_TIMEOUT_US: u64 = 30_000_000;
pub const DEFAULT_ACTIVE_TIMEOUT_US: u64 = 120_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowEvent {
    NewFlow,
    Continued,
    /// The previous flow for this five-tuple timed out and was queued for
    /// export; the packet opened a fresh flow.
    ExpiredThenNew,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Upsert {
    pub event: FlowEvent,
    pub direction: Direction,
}

/// Active flows plus a queue of flows that timed out on upsert.
///
/// Timeouts are closed intervals: a packet exactly `idle_timeout` after the
/// last one still continues the flow, one microsecond later starts a new
/// one. The same holds for the active (lifetime) timeout measured from the
/// first packet.
#[derive(Debug)]
pub struct FlowTable {
    active: HashMap<CanonicalKey, FlowAccumulator>,
    expired: Vec<FlowAccumulator>,
    idle_timeout_us: u64,
    active_timeout_us: u64,
}

impl Default for FlowTable {
    fn default() -> Self {
        FlowTable::new(DEFAULT_IDLE_TIMEOUT_US, DEFAULT_ACTIVE_TIMEOUT_US)
    }
}

fn timed_out(acc: &FlowAccumulator, now_us: u64, idle_us: u64, active_us: u64) -> bool {
    now_us > acc.last_seen_us().saturating_add(idle_us)
        || now_us > acc.first_seen_us().saturating_add(active_us)
}

fn deadline(acc: &FlowAccumulator, idle_us: u64, active_us: u64) -> u64 {
    acc.last_seen_us()
        .saturating_add(idle_us)
        .min(acc.first_seen_us().saturating_add(active_us))
}

fn sort_by_start(flows: &mut [FlowAccumulator]) {
    flows.sort_by_key(|a| (a.first_seen_us(), *a.key()));
}

impl FlowTable {
    pub fn new(idle_timeout_us: u64, active_timeout_us: u64) -> Self {
        FlowTable {
            active: HashMap::new(),
            expired: Vec::new(),
            idle_timeout_us,
            active_timeout_us,
        }
    }

    pub fn idle_timeout_us(&self) -> u64 {
        self.idle_timeout_us
    }

    pub fn active_timeout_us(&self) -> u64 {
        self.active_timeout_us
    }

    /// Number of active flows.
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty() && self.expired.is_empty()
    }

    /// Flows expired on upsert and not yet drained.
    pub fn pending_expired(&self) -> usize {
        self.expired.len()
    }

    pub fn get(&self, key: &FlowKey) -> Option<&FlowAccumulator> {
        self.active.get(&key.canonical())
    }

    pub fn upsert(&mut self, pkt: &PacketRecord) -> Upsert {
        let (idle, lifetime) = (self.idle_timeout_us, self.active_timeout_us);
        match self.active.entry(CanonicalKey::of(pkt)) {
            Entry::Vacant(slot) => {
                let acc = slot.insert(FlowAccumulator::new(FlowKey::from_packet(pkt)));
                acc.accumulate(pkt, Direction::ClientToServer);
                Upsert {
                    event: FlowEvent::NewFlow,
                    direction: Direction::ClientToServer,
                }
            }
            Entry::Occupied(mut slot) => {
                let acc = slot.get_mut();
                if timed_out(acc, pkt.timestamp_us, idle, lifetime) {
                    let fresh = FlowAccumulator::new(FlowKey::from_packet(pkt));
                    self.expired.push(std::mem::replace(acc, fresh));
                    acc.accumulate(pkt, Direction::ClientToServer);
                    Upsert {
                        event: FlowEvent::ExpiredThenNew,
                        direction: Direction::ClientToServer,
                    }
                } else {
                    let direction = acc.key().direction_of(pkt);
                    acc.accumulate(pkt, direction);
                    Upsert {
                        event: FlowEvent::Continued,
                        direction,
                    }
                }
            }
        }
    }

    /// Drains every flow whose idle or active timeout elapsed by `now_us`,
    /// together with flows already queued by upsert.
    ///
    /// Order: expiry deadline (the earlier of `last_seen + idle` and
    /// `first_seen + active`), then `first_seen`, then key.
    pub fn expire_flows(&mut self, now_us: u64) -> Vec<FlowAccumulator> {
        let (idle, lifetime) = (self.idle_timeout_us, self.active_timeout_us);
        let due: Vec<CanonicalKey> = self
            .active
            .iter()
            .filter(|(_, acc)| timed_out(acc, now_us, idle, lifetime))
            .map(|(k, _)| *k)
            .collect();
        let mut out = std::mem::take(&mut self.expired);
        out.extend(due.iter().filter_map(|k| self.active.remove(k)));
        out.sort_by_key(|a| (deadline(a, idle, lifetime), a.first_seen_us(), *a.key()));
        out
    }

    /// Drains everything, ordered by `first_seen` then key.
    pub fn flush(&mut self) -> Vec<FlowAccumulator> {
        let mut out = std::mem::take(&mut self.expired);
        out.extend(self.active.drain().map(|(_, acc)| acc));
        sort_by_start(&mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{TcpInfo, PROTO_TCP, PROTO_UDP};
    use std::net::Ipv4Addr;

    fn udp(ts: u64, src: [u8; 4], sport: u16, dst: [u8; 4], dport: u16) -> PacketRecord {
        PacketRecord {
            timestamp_us: ts,
            src_ip: Ipv4Addr::from(src),
            dst_ip: Ipv4Addr::from(dst),
            src_port: sport,
            dst_port: dport,
            l4_protocol: PROTO_UDP,
            ip_total_length: 100,
            ttl: 64,
            tcp: None,
            icmp: None,
            payload: Vec::new(),
        }
    }

    fn tcp(ts: u64, src: [u8; 4], sport: u16, dst: [u8; 4], dport: u16, flags: u8) -> PacketRecord {
        PacketRecord {
            l4_protocol: PROTO_TCP,
            tcp: Some(TcpInfo { flags, seq: 0, payload_len: 0, window: 1024 }),
            ..udp(ts, src, sport, dst, dport)
        }
    }

    const C: [u8; 4] = [10, 0, 0, 1];
    const S: [u8; 4] = [10, 0, 0, 2];

    #[test]
    fn handshake_orientation() {
        let mut t = FlowTable::default();
        let syn = t.upsert(&tcp(0, C, 40000, S, 80, 0x02));
        assert_eq!(syn, Upsert { event: FlowEvent::NewFlow, direction: Direction::ClientToServer });
        let synack = t.upsert(&tcp(10, S, 80, C, 40000, 0x12));
        assert_eq!(
            synack,
            Upsert { event: FlowEvent::Continued, direction: Direction::ServerToClient }
        );
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn idle_gap_splits_flow() {
        let mut t = FlowTable::new(30_000_000, 120_000_000);
        t.upsert(&udp(0, C, 5000, S, 53));
        let second = t.upsert(&udp(120_000_000, C, 5000, S, 53));
        assert_eq!(second.event, FlowEvent::ExpiredThenNew);
        let flows = t.flush();
        assert_eq!(flows.len(), 2);
        assert!(flows.iter().all(|f| f.packets() == 1));
    }

    #[test]
    fn idle_boundary_is_closed() {
        let idle = 30_000_000;
        let mut t = FlowTable::new(idle, u64::MAX / 2);
        t.upsert(&udp(1_000, C, 1, S, 2));
        let at = t.upsert(&udp(1_000 + idle, C, 1, S, 2));
        assert_eq!(at.event, FlowEvent::Continued);
        let after = t.upsert(&udp(1_000 + 2 * idle + 1, C, 1, S, 2));
        assert_eq!(after.event, FlowEvent::ExpiredThenNew);
    }

    #[test]
    fn active_timeout_splits_busy_flow() {
        let mut t = FlowTable::new(10, 100);
        let events: Vec<_> = (0..=20u64)
            .map(|i| t.upsert(&udp(i * 10, C, 1, S, 2)).event)
            .collect();
        // packets at 0..=100 fit the first lifetime, 110 opens the second
        assert_eq!(events[10], FlowEvent::Continued);
        assert_eq!(events[11], FlowEvent::ExpiredThenNew);
        assert_eq!(t.flush().len(), 2);
    }

    #[test]
    fn expire_empty_table() {
        assert!(FlowTable::default().expire_flows(1_000_000_000).is_empty());
    }

    #[test]
    fn expire_just_past_idle() {
        let idle = 5_000;
        let mut t = FlowTable::new(idle, 1_000_000);
        t.upsert(&udp(700, C, 1, S, 2));
        assert!(t.expire_flows(700 + idle).is_empty());
        let out = t.expire_flows(700 + idle + 1);
        assert_eq!(out.len(), 1);
        assert_eq!(t.len(), 0);
    }

    #[test]
    fn expire_order_is_by_deadline_then_start_then_key() {
        let mut t = FlowTable::new(100, 10_000);
        // a: first 0, last 50 -> deadline 150
        t.upsert(&udp(0, [1, 1, 1, 1], 1, S, 9));
        t.upsert(&udp(50, [1, 1, 1, 1], 1, S, 9));
        // b: first 20, last 20 -> deadline 120
        t.upsert(&udp(20, [2, 2, 2, 2], 1, S, 9));
        // c and d: first 40 -> deadline 140, tie broken by key
        t.upsert(&udp(40, [4, 4, 4, 4], 1, S, 9));
        t.upsert(&udp(40, [3, 3, 3, 3], 1, S, 9));
        // e stays
        t.upsert(&udp(400, [5, 5, 5, 5], 1, S, 9));

        let order: Vec<u8> = t
            .expire_flows(300)
            .iter()
            .map(|a| a.key().client_ip.octets()[0])
            .collect();
        assert_eq!(order, vec![2, 3, 4, 1]);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn flush_drains_and_is_idempotent() {
        let mut t = FlowTable::default();
        t.upsert(&udp(5, [9, 9, 9, 9], 1, S, 2));
        t.upsert(&udp(5, C, 1, S, 2));
        let out = t.flush();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].key().client_ip, Ipv4Addr::new(9, 9, 9, 9));
        assert_eq!(t.len(), 0);
        assert!(t.flush().is_empty());
    }

    #[test]
    fn interleaved_flows_keep_per_flow_counts() {
        let mut t = FlowTable::default();
        let mut expected = [0u64; 5];
        for i in 0..97u64 {
            let f = (i * 7 % 5) as usize;
            expected[f] += 1;
            let host = [10, 1, 0, f as u8];
            if i % 2 == 0 {
                t.upsert(&udp(i, host, 1000 + f as u16, S, 53));
            } else {
                t.upsert(&udp(i, S, 53, host, 1000 + f as u16));
            }
        }
        let flows = t.flush();
        assert_eq!(flows.len(), 5);
        for acc in &flows {
            let f = acc.key().canonical();
            let idx = (0..5)
                .find(|&i| {
                    FlowKey {
                        client_ip: Ipv4Addr::from([10, 1, 0, i as u8]),
                        server_ip: Ipv4Addr::from(S),
                        client_port: 1000 + i as u16,
                        server_port: 53,
                        l4_protocol: PROTO_UDP,
                    }
                    .canonical()
                        == f
                })
                .unwrap();
            assert_eq!(acc.packets(), expected[idx]);
        }
    }

    #[test]
    fn reordered_packet_extends_flow_backwards() {
        let mut t = FlowTable::default();
        t.upsert(&udp(1_000_000, C, 1, S, 2));
        assert_eq!(t.upsert(&udp(400_000, S, 2, C, 1)).event, FlowEvent::Continued);
        let acc = &t.flush()[0];
        assert_eq!(acc.first_seen_us(), 400_000);
        assert_eq!(acc.last_seen_us(), 1_000_000);
    }
}
