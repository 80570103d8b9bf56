//! Discrete-event kernel: an ordered event queue plus the transmission
//! fabric (radio broadcast fan-out and wired links) with unified logging.

use crate::geom::Vec2;
use crate::ids::{EntityId, MessageId};
use crate::logs::{MsgRecord, RunLogs};
use crate::message::{MessageKind, VanetMessage};
use crate::time::SimTime;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct Entry<T> {
    at: SimTime,
    seq: u64,
    payload: T,
}

impl<T> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl<T> Eq for Entry<T> {}
impl<T> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Entry<T> {
    // Reversed so the BinaryHeap max-heap pops the earliest entry; ties
    // break by insertion order (FIFO).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

/// Time-ordered event queue. Events at equal timestamps pop in insertion
/// order, which keeps runs reproducible for a given seed.
pub struct Scheduler<T> {
    heap: BinaryHeap<Entry<T>>,
    next_seq: u64,
    now: SimTime,
}

impl<T> Default for Scheduler<T> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: SimTime::ZERO,
        }
    }
}

impl<T> Scheduler<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Queues `payload` for `at`. Scheduling into the past is a simulation
    /// bug and aborts the run.
    pub fn schedule(&mut self, at: SimTime, payload: T) {
        assert!(
            at >= self.now,
            "scheduled event at {at} before current time {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { at, seq, payload });
    }

    /// Pops the earliest event and advances the clock to it.
    pub fn pop(&mut self) -> Option<(SimTime, T)> {
        let e = self.heap.pop()?;
        debug_assert!(e.at >= self.now);
        self.now = e.at;
        Some((e.at, e.payload))
    }
}

/// Radio and wired transmission parameters plus the message log. Produces
/// delivery fan-outs; the caller schedules them.
pub struct Fabric {
    pub logs: RunLogs,
    seqs: Vec<u32>,
    pub range_m: f64,
    pub hop_latency: SimTime,
    pub rsu_latency: SimTime,
    pub ta_latency: SimTime,
    /// Beacons are logged for overhead accounting but carry no payload
    /// anybody consumes, so delivery fan-out for them is skipped.
    pub deliver_beacons: bool,
}

impl Fabric {
    pub fn new(entities: usize, range_m: f64, hop_ms: u64, rsu_ms: u64, ta_ms: u64) -> Self {
        Self {
            logs: RunLogs::default(),
            seqs: vec![0; entities],
            range_m,
            hop_latency: SimTime::from_millis(hop_ms),
            rsu_latency: SimTime::from_millis(rsu_ms),
            ta_latency: SimTime::from_millis(ta_ms),
            deliver_beacons: false,
        }
    }

    pub fn next_id(&mut self, origin: EntityId) -> MessageId {
        let seq = self.seqs[origin.index()];
        self.seqs[origin.index()] += 1;
        MessageId { origin, seq }
    }

    /// Logs one over-the-air transmission and returns `(recipient,
    /// deliver_at)` for every positioned entity within range of the sender.
    /// The sender itself never receives its own transmission.
    pub fn broadcast(
        &mut self,
        now: SimTime,
        from: EntityId,
        msg: &VanetMessage,
        positions: &[Option<Vec2>],
    ) -> Vec<(EntityId, SimTime)> {
        self.logs.messages.push(MsgRecord {
            at: now,
            sender: from,
            receiver: None,
            kind: msg.kind(),
            id: msg.id,
            hop: msg.hop,
            bytes: msg.bytes(),
        });
        if msg.kind() == MessageKind::Beacon && !self.deliver_beacons {
            return Vec::new();
        }
        let Some(origin) = positions[from.index()] else {
            return Vec::new();
        };
        let deliver_at = now.plus(self.hop_latency);
        positions
            .iter()
            .enumerate()
            .filter_map(|(i, pos)| {
                if i == from.index() {
                    return None;
                }
                let pos = (*pos)?;
                if origin.within(pos, self.range_m) {
                    Some((EntityId(i as u32), deliver_at))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Logs a point-to-point wired transmission and returns its delivery
    /// time.
    pub fn wired(
        &mut self,
        now: SimTime,
        from: EntityId,
        to: EntityId,
        msg: &VanetMessage,
        latency: SimTime,
    ) -> SimTime {
        self.logs.messages.push(MsgRecord {
            at: now,
            sender: from,
            receiver: Some(to),
            kind: msg.kind(),
            id: msg.id,
            hop: msg.hop,
            bytes: msg.bytes(),
        });
        now.plus(latency)
    }
}
