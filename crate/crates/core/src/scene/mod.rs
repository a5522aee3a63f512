//! Per-participant replicas of the shared scene.
//!
//! One node is the actor: it applies timed rotations to shared objects and
//! announces them with control packets. Every other node is an observer that
//! rebuilds the object's orientation from those packets under one of three
//! strategies:
//!
//! * `NoCompensation`: start the announced rotation on receipt and stop it on
//!   the next at-rest packet. The actor's pose is never adopted, so any timing
//!   difference between start and stop delivery stays in the replica.
//! * `EventUpdates`: adopt the absolute pose carried by every packet, then
//!   integrate from there using local receive time.
//! * `Asa`: adopt the pose and back-date the rotation start by the estimated
//!   one-way delay to the sender, taken from the delay history that the
//!   node's PING/PONG measurements maintain at the adaptive rate `γ`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mathcore::{
    correction_quaternion, drift_angle, MathError, Pose, UnitQuaternion, AXIS_TOLERANCE,
};
use crate::netsim::{us_to_seconds, Context, NodeId, Process};
use crate::protocol::{
    ActionDescriptor, ControlPacket, DelayHistory, MeasurementController, MeasurementMode,
    PacketKind, ProtocolError, DEFAULT_HISTORY_CAPACITY,
};

/// Timer token for the periodic delay measurement.
pub const MEASUREMENT_TIMER: u64 = 1;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("unknown object {0}")]
    NotFound(u32),
    #[error("object {0} already has an action in progress")]
    Busy(u32),
    #[error("node {0} is not the actor")]
    NotActor(NodeId),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid node setup: {0}")]
    InvalidSetup(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Actor,
    Observer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    NoCompensation,
    EventUpdates,
    Asa,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Self::NoCompensation, Self::EventUpdates, Self::Asa];

    pub fn name(&self) -> &'static str {
        match self {
            Self::NoCompensation => "no_compensation",
            Self::EventUpdates => "event_updates",
            Self::Asa => "asa",
        }
    }
}

/// A finite rotation applied by the actor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub object_id: u32,
    pub axis: [f64; 3],
    /// Degrees/second.
    pub angular_velocity: f64,
    /// Degrees, `(0, 360]`.
    pub target_angle: f64,
    /// µs on the actor's clock.
    pub start_time: u64,
}

impl ActionSpec {
    pub fn validate(&self) -> Result<(), SceneError> {
        let norm = self.axis.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > AXIS_TOLERANCE {
            return Err(SceneError::InvalidAction(format!(
                "axis must be unit length, got norm {norm}"
            )));
        }
        if !(self.angular_velocity > 0.0) || !self.angular_velocity.is_finite() {
            return Err(SceneError::InvalidAction(format!(
                "angular velocity must be positive, got {}",
                self.angular_velocity
            )));
        }
        if !(self.target_angle > 0.0 && self.target_angle <= 360.0) {
            return Err(SceneError::InvalidAction(format!(
                "target angle must lie in (0, 360], got {}",
                self.target_angle
            )));
        }
        Ok(())
    }

    /// Seconds needed to reach the target angle.
    pub fn duration(&self) -> f64 {
        self.target_angle / self.angular_velocity
    }
}

/// A rotation being integrated on a replica.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Motion {
    axis: [f64; 3],
    /// Degrees/second.
    rate: f64,
    /// Local seconds; may precede the receive time under ASA.
    start: f64,
    /// Stop after this many degrees. Only the actor knows the target.
    cap: Option<f64>,
}

impl Motion {
    fn angle_at(&self, now: f64) -> f64 {
        let swept = self.rate * (now - self.start).max(0.0);
        match self.cap {
            Some(cap) => swept.min(cap),
            None => swept,
        }
    }

    /// Within a nano-degree of the cap counts as finished; µs timestamps
    /// rarely land on the exact float.
    fn finished_at(&self, now: f64) -> bool {
        self.cap
            .is_some_and(|cap| self.rate * (now - self.start) >= cap - 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub object_id: u32,
    /// Pose at the start of the current motion, or the resting pose.
    pub pose: Pose,
    motion: Option<Motion>,
}

impl SceneObject {
    pub fn new(object_id: u32, pose: Pose) -> Self {
        Self {
            object_id,
            pose,
            motion: None,
        }
    }

    pub fn is_moving(&self) -> bool {
        self.motion.is_some()
    }

    /// Rotations are about world axes: `rot(axis, θ) · base`.
    pub fn orientation_at(&self, now: f64) -> UnitQuaternion {
        match &self.motion {
            None => self.pose.orientation,
            Some(m) => {
                let angle = m.angle_at(now);
                if angle == 0.0 {
                    return self.pose.orientation;
                }
                let rot = UnitQuaternion::from_axis_angle(m.axis, angle)
                    .expect("motion axes are validated on install");
                rot * self.pose.orientation
            }
        }
    }

    /// Folds the current motion into the resting pose.
    fn settle(&mut self, now: f64) {
        if self.motion.is_some() {
            self.pose.orientation = self.orientation_at(now);
            self.motion = None;
        }
    }
}

/// Orientation drift between actor and one observer at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftSample {
    pub action_index: usize,
    pub observer_id: NodeId,
    /// Degrees, `[0, 360]`.
    pub alpha: f64,
    /// Simulation time, µs.
    pub sim_time: u64,
}

#[derive(Debug, Clone)]
pub struct ParticipantNode {
    node_id: NodeId,
    role: Role,
    strategy: Strategy,
    peers: Vec<NodeId>,
    objects: BTreeMap<u32, SceneObject>,
    delay_histories: BTreeMap<NodeId, DelayHistory>,
    controller: MeasurementController,
    history_capacity: usize,
    sequence: u32,
    measurements: u64,
}

impl ParticipantNode {
    pub fn new(
        node_id: NodeId,
        role: Role,
        strategy: Strategy,
        peers: Vec<NodeId>,
        controller: MeasurementController,
    ) -> Result<Self, SceneError> {
        if strategy == Strategy::Asa && controller.mode() != MeasurementMode::Adaptive {
            return Err(SceneError::InvalidSetup(
                "the adaptive strategy needs an adaptive measurement controller".to_string(),
            ));
        }
        if peers.contains(&node_id) {
            return Err(SceneError::InvalidSetup(format!(
                "node {node_id} lists itself as a peer"
            )));
        }
        Ok(Self {
            node_id,
            role,
            strategy,
            peers,
            objects: BTreeMap::new(),
            delay_histories: BTreeMap::new(),
            controller,
            history_capacity: DEFAULT_HISTORY_CAPACITY,
            sequence: 0,
            measurements: 0,
        })
    }

    pub fn with_history_capacity(mut self, capacity: usize) -> Self {
        self.history_capacity = capacity.max(1);
        self
    }

    pub fn node_id(&self) -> NodeId {
        self.node_id
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn peers(&self) -> &[NodeId] {
        &self.peers
    }

    pub fn controller(&self) -> &MeasurementController {
        &self.controller
    }

    pub fn delay_history(&self, peer: NodeId) -> Option<&DelayHistory> {
        self.delay_histories.get(&peer)
    }

    /// Number of delay measurements completed (PONGs received).
    pub fn measurements(&self) -> u64 {
        self.measurements
    }

    pub fn object(&self, object_id: u32) -> Option<&SceneObject> {
        self.objects.get(&object_id)
    }

    pub fn add_object(&mut self, object_id: u32, pose: Pose) {
        self.objects
            .insert(object_id, SceneObject::new(object_id, pose));
    }

    fn next_packet(&mut self, kind: PacketKind, object_id: u32, now: u64) -> ControlPacket {
        let mut p = ControlPacket::new(kind, object_id, self.node_id, self.sequence);
        self.sequence = self.sequence.wrapping_add(1);
        p.send_timestamp = now;
        p
    }

    fn object_mut(&mut self, object_id: u32) -> Result<&mut SceneObject, SceneError> {
        self.objects
            .get_mut(&object_id)
            .ok_or(SceneError::NotFound(object_id))
    }

    /// Starts `action` at `now` and returns one ACTION_START per peer,
    /// carrying the pose at the send instant.
    pub fn begin_action(
        &mut self,
        action: &ActionSpec,
        now: u64,
    ) -> Result<Vec<(NodeId, ControlPacket)>, SceneError> {
        if self.role != Role::Actor {
            return Err(SceneError::NotActor(self.node_id));
        }
        action.validate()?;
        let now_s = us_to_seconds(now);
        let obj = self.object_mut(action.object_id)?;
        match &obj.motion {
            Some(m) if !m.finished_at(now_s) => return Err(SceneError::Busy(action.object_id)),
            _ => obj.settle(now_s),
        }
        obj.motion = Some(Motion {
            axis: action.axis,
            rate: action.angular_velocity,
            start: now_s,
            cap: Some(action.target_angle),
        });
        let pose = obj.pose;
        let peers = self.peers.clone();
        Ok(peers
            .into_iter()
            .map(|peer| {
                let mut p = self.next_packet(PacketKind::ActionStart, action.object_id, now);
                p.pose = pose;
                p.action = ActionDescriptor::rotate(action.axis, action.angular_velocity);
                (peer, p)
            })
            .collect())
    }

    /// Ends the object's action at `now` and returns one at-rest
    /// POSE_SNAPSHOT per peer with the final pose.
    pub fn complete_action(
        &mut self,
        object_id: u32,
        now: u64,
    ) -> Result<Vec<(NodeId, ControlPacket)>, SceneError> {
        if self.role != Role::Actor {
            return Err(SceneError::NotActor(self.node_id));
        }
        let obj = self.object_mut(object_id)?;
        obj.settle(us_to_seconds(now));
        let pose = obj.pose;
        let peers = self.peers.clone();
        Ok(peers
            .into_iter()
            .map(|peer| {
                let mut p = self.next_packet(PacketKind::PoseSnapshot, object_id, now);
                p.pose = pose;
                (peer, p)
            })
            .collect())
    }

    pub fn local_orientation(
        &self,
        object_id: u32,
        now: u64,
    ) -> Result<UnitQuaternion, SceneError> {
        self.objects
            .get(&object_id)
            .map(|o| o.orientation_at(us_to_seconds(now)))
            .ok_or(SceneError::NotFound(object_id))
    }

    fn delay_estimate(&self, peer: NodeId) -> f64 {
        self.delay_histories
            .get(&peer)
            .and_then(|h| h.one_way_delay_estimate().ok())
            .unwrap_or(0.0)
    }

    /// Applies an object update from `from` according to the strategy.
    fn apply_update(&mut self, from: NodeId, packet: &ControlPacket, now: u64) {
        let now_s = us_to_seconds(now);
        let strategy = self.strategy;
        let estimate = match strategy {
            Strategy::Asa => self.delay_estimate(from),
            _ => 0.0,
        };
        let obj = self
            .objects
            .entry(packet.object_id)
            .or_insert_with(|| SceneObject::new(packet.object_id, packet.pose));
        match strategy {
            Strategy::NoCompensation => obj.settle(now_s),
            Strategy::EventUpdates | Strategy::Asa => {
                obj.pose = packet.pose;
                obj.motion = None;
            }
        }
        let action = packet.action;
        if action.rate != 0.0 {
            obj.motion = Some(Motion {
                axis: action.axis,
                rate: action.rate,
                start: now_s - estimate,
                cap: None,
            });
        }
    }

    /// Handles one packet received at `now` (local µs). Returns the PONG
    /// to send back when the packet is a PING.
    pub fn on_receive(
        &mut self,
        from: NodeId,
        packet: &ControlPacket,
        now: u64,
    ) -> Result<Option<(NodeId, ControlPacket)>, SceneError> {
        match packet.kind {
            PacketKind::ActionStart | PacketKind::PoseSnapshot => {
                if packet.action.rate != 0.0 {
                    let norm = packet.action.axis.iter().map(|c| c * c).sum::<f64>().sqrt();
                    if (norm - 1.0).abs() > AXIS_TOLERANCE {
                        return Err(SceneError::InvalidAction(format!(
                            "received rotation axis with norm {norm}"
                        )));
                    }
                }
                self.apply_update(from, packet, now);
                Ok(None)
            }
            PacketKind::Ping => {
                let mut pong = self.next_packet(PacketKind::Pong, packet.object_id, now);
                pong.echo_timestamp = packet.send_timestamp;
                Ok(Some((from, pong)))
            }
            PacketKind::Pong => {
                let rtt = now.saturating_sub(packet.echo_timestamp);
                let one_way = us_to_seconds(rtt) / 2.0;
                let capacity = self.history_capacity;
                let history = self
                    .delay_histories
                    .entry(from)
                    .or_insert_with(|| DelayHistory::new(capacity));
                history.record_delay(one_way)?;
                self.measurements += 1;
                if self.strategy == Strategy::Asa {
                    self.controller.adapt_rate(history)?;
                }
                Ok(None)
            }
        }
    }

    /// One PING per peer.
    pub fn measurement_pings(&mut self, now: u64) -> Vec<(NodeId, ControlPacket)> {
        let peers = self.peers.clone();
        peers
            .into_iter()
            .map(|peer| (peer, self.next_packet(PacketKind::Ping, 0, now)))
            .collect()
    }
}

impl Process for ParticipantNode {
    type Error = SceneError;

    fn on_packet(
        &mut self,
        ctx: &mut Context,
        from: NodeId,
        packet: ControlPacket,
    ) -> Result<(), SceneError> {
        if let Some((to, reply)) = self.on_receive(from, &packet, ctx.now())? {
            ctx.send(to, reply);
        }
        Ok(())
    }

    fn on_timer(&mut self, ctx: &mut Context, token: u64) -> Result<(), SceneError> {
        if token == MEASUREMENT_TIMER {
            for (to, ping) in self.measurement_pings(ctx.now()) {
                ctx.send(to, ping);
            }
            ctx.set_timer(self.controller.interval_us(), MEASUREMENT_TIMER);
        }
        Ok(())
    }
}

/// Drift between the actor and an observer, each evaluated on its own clock
/// at the same simulation instant.
pub fn sample_drift_local(
    actor: &ParticipantNode,
    actor_now: u64,
    observer: &ParticipantNode,
    observer_now: u64,
    object_id: u32,
    action_index: usize,
    sim_time: u64,
) -> Result<DriftSample, SceneError> {
    let q_s = actor.local_orientation(object_id, actor_now)?;
    let q_c = observer.local_orientation(object_id, observer_now)?;
    Ok(DriftSample {
        action_index,
        observer_id: observer.node_id,
        alpha: drift_angle(correction_quaternion(q_s, q_c)),
        sim_time,
    })
}

/// Drift between actor and observer at `now` (shared clock).
pub fn sample_drift(
    actor: &ParticipantNode,
    observer: &ParticipantNode,
    object_id: u32,
    now: u64,
    action_index: usize,
) -> Result<DriftSample, SceneError> {
    sample_drift_local(actor, now, observer, now, object_id, action_index, now)
}
