//! Deterministic discrete-event network simulator.
//!
//! A [`Simulation`] owns a set of [`Process`] nodes connected by a full mesh
//! of independent per-direction [`Link`]s. Packets travel as encoded control
//! packet bytes; events are ordered by `(deliver_at, insertion sequence)`, so
//! equal configurations and seeds replay identically.

mod link;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::error::Error as StdError;

use thiserror::Error;

pub use link::{
    derive_seed, sample_latency, seconds_to_us, us_to_seconds, Jitter, Link, LinkModel,
    DEFAULT_JITTER_FRACTION,
};

use crate::protocol::{decode_cpo, encode_cpo, ControlPacket, ProtocolError, CPO_SIZE};

pub type NodeId = u16;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("codec error: {0}")]
    Codec(#[from] ProtocolError),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("cannot run backwards: now={now} µs, t_end={t_end} µs")]
    TimeReversal { now: u64, t_end: u64 },
    #[error("node {destination} failed handling {event} at t={at} µs: {source}")]
    Handler {
        at: u64,
        destination: NodeId,
        event: String,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
}

/// Simulation time in microseconds since the experiment epoch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct VirtualClock {
    now: u64,
}

impl VirtualClock {
    pub fn now(&self) -> u64 {
        self.now
    }

    fn advance_to(&mut self, t: u64) {
        debug_assert!(t >= self.now);
        self.now = self.now.max(t);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Packet([u8; CPO_SIZE]),
    Timer(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent {
    pub deliver_at: u64,
    pub tiebreak: u64,
    pub sent_at: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub payload: Payload,
}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        (other.deliver_at, other.tiebreak).cmp(&(self.deliver_at, self.tiebreak))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One delivered packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub deliver_at: u64,
    pub sent_at: u64,
    pub source: NodeId,
    pub destination: NodeId,
    pub bytes: [u8; CPO_SIZE],
}

impl DeliveryRecord {
    /// Fixed-width serialization: four little-endian integers then the
    /// packet bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + CPO_SIZE);
        out.extend_from_slice(&self.deliver_at.to_le_bytes());
        out.extend_from_slice(&self.sent_at.to_le_bytes());
        out.extend_from_slice(&self.source.to_le_bytes());
        out.extend_from_slice(&self.destination.to_le_bytes());
        out.extend_from_slice(&self.bytes);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledSend {
    pub deliver_at: u64,
    /// Sampled latency in seconds, before any FIFO clamp.
    pub latency: f64,
}

/// Handle given to a node while it processes an event.
#[derive(Debug)]
pub struct Context {
    node: NodeId,
    local_now: u64,
    sends: Vec<(NodeId, ControlPacket)>,
    timers: Vec<(u64, u64)>,
}

impl Context {
    pub fn node_id(&self) -> NodeId {
        self.node
    }

    /// Current time on this node's clock, µs.
    pub fn now(&self) -> u64 {
        self.local_now
    }

    pub fn send(&mut self, to: NodeId, packet: ControlPacket) {
        self.sends.push((to, packet));
    }

    /// Wakes this node with `token` after `delay_us`.
    pub fn set_timer(&mut self, delay_us: u64, token: u64) {
        self.timers.push((delay_us, token));
    }
}

/// A participant driven by the event loop.
pub trait Process {
    type Error: StdError + Send + Sync + 'static;

    fn on_packet(
        &mut self,
        ctx: &mut Context,
        from: NodeId,
        packet: ControlPacket,
    ) -> Result<(), Self::Error>;

    fn on_timer(&mut self, ctx: &mut Context, token: u64) -> Result<(), Self::Error>;
}

pub struct Simulation<P> {
    clock: VirtualClock,
    nodes: Vec<P>,
    clock_offsets: Vec<i64>,
    links: BTreeMap<(NodeId, NodeId), Link>,
    queue: BinaryHeap<SimEvent>,
    next_tiebreak: u64,
}

impl<P: Process> Simulation<P> {
    /// Full mesh; every direction gets its own stream derived from
    /// `link.seed`.
    pub fn new(nodes: Vec<P>, link: LinkModel) -> Self {
        let n = nodes.len() as NodeId;
        let mut links = BTreeMap::new();
        for from in 0..n {
            for to in 0..n {
                if from != to {
                    let stream = ((from as u64) << 16 | to as u64) + 1;
                    let model = link.with_seed(derive_seed(link.seed, stream));
                    links.insert((from, to), Link::new(model));
                }
            }
        }
        let count = nodes.len();
        Self {
            clock: VirtualClock::default(),
            nodes,
            clock_offsets: vec![0; count],
            links,
            queue: BinaryHeap::new(),
            next_tiebreak: 0,
        }
    }

    pub fn now(&self) -> u64 {
        self.clock.now()
    }

    /// Time on `node`'s clock: simulation time plus its constant offset.
    pub fn local_now(&self, node: NodeId) -> u64 {
        let offset = self.clock_offsets[node as usize];
        self.clock.now().saturating_add_signed(offset)
    }

    pub fn set_clock_offset(&mut self, node: NodeId, offset_us: i64) -> Result<(), SimError> {
        let slot = self
            .clock_offsets
            .get_mut(node as usize)
            .ok_or(SimError::UnknownNode(node))?;
        *slot = offset_us;
        Ok(())
    }

    /// Replaces one link direction.
    pub fn set_link(&mut self, from: NodeId, to: NodeId, model: LinkModel) -> Result<(), SimError> {
        let link = self
            .links
            .get_mut(&(from, to))
            .ok_or(SimError::UnknownNode(from.max(to)))?;
        *link = Link::new(model);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &P {
        &self.nodes[id as usize]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut P {
        &mut self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[P] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<P> {
        self.nodes
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    fn push(&mut self, deliver_at: u64, source: NodeId, destination: NodeId, payload: Payload) {
        let tiebreak = self.next_tiebreak;
        self.next_tiebreak += 1;
        self.queue.push(SimEvent {
            deliver_at,
            tiebreak,
            sent_at: self.clock.now(),
            source,
            destination,
            payload,
        });
    }

    /// Encodes `packet` and schedules its delivery at `now + latency`.
    pub fn send(
        &mut self,
        from: NodeId,
        to: NodeId,
        packet: &ControlPacket,
    ) -> Result<ScheduledSend, SimError> {
        let bytes = encode_cpo(packet)?;
        let now = self.clock.now();
        let link = self
            .links
            .get_mut(&(from, to))
            .ok_or(SimError::UnknownNode(
                if (from as usize) < self.nodes.len() {
                    to
                } else {
                    from
                },
            ))?;
        let (deliver_at, latency) = link.schedule(now);
        self.push(deliver_at, from, to, Payload::Packet(bytes));
        Ok(ScheduledSend {
            deliver_at,
            latency,
        })
    }

    pub fn schedule_timer(&mut self, node: NodeId, at: u64, token: u64) -> Result<(), SimError> {
        if node as usize >= self.nodes.len() {
            return Err(SimError::UnknownNode(node));
        }
        self.push(at.max(self.clock.now()), node, node, Payload::Timer(token));
        Ok(())
    }

    /// Processes every event with `deliver_at <= t_end` in order, then sets
    /// the clock to `t_end`. Returns the delivered packets chronologically.
    pub fn run_until(&mut self, t_end: u64) -> Result<Vec<DeliveryRecord>, SimError> {
        let now = self.clock.now();
        if t_end < now {
            return Err(SimError::TimeReversal { now, t_end });
        }
        let mut log = Vec::new();
        while self.queue.peek().is_some_and(|e| e.deliver_at <= t_end) {
            let event = self.queue.pop().expect("peeked");
            self.clock.advance_to(event.deliver_at);
            let dest = event.destination;
            let mut ctx = Context {
                node: dest,
                local_now: self.local_now(dest),
                sends: Vec::new(),
                timers: Vec::new(),
            };
            let node = &mut self.nodes[dest as usize];
            let (outcome, label) = match &event.payload {
                Payload::Packet(bytes) => {
                    let packet = decode_cpo(bytes)?;
                    log.push(DeliveryRecord {
                        deliver_at: event.deliver_at,
                        sent_at: event.sent_at,
                        source: event.source,
                        destination: dest,
                        bytes: *bytes,
                    });
                    (
                        node.on_packet(&mut ctx, event.source, packet),
                        format!("{:?} from node {}", packet.kind, event.source),
                    )
                }
                Payload::Timer(token) => {
                    (node.on_timer(&mut ctx, *token), format!("timer {token}"))
                }
            };
            outcome.map_err(|e| SimError::Handler {
                at: event.deliver_at,
                destination: dest,
                event: label,
                source: Box::new(e),
            })?;
            for (to, packet) in ctx.sends {
                self.send(dest, to, &packet)?;
            }
            for (delay, token) in ctx.timers {
                let at = self.clock.now() + delay;
                self.schedule_timer(dest, at, token)?;
            }
        }
        self.clock.advance_to(t_end);
        Ok(log)
    }
}
