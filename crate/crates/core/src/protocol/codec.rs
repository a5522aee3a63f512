//! Fixed-layout little-endian encoding of [`ControlPacket`].
//!
//! | offset | size | field            |
//! |-------:|-----:|------------------|
//! |      0 |    4 | magic `CPO1`     |
//! |      4 |    4 | object_id (u32)  |
//! |      8 |    2 | sender_id (u16)  |
//! |     10 |    4 | sequence (u32)   |
//! |     14 |    1 | kind (u8)        |
//! |     15 |    8 | send_timestamp   |
//! |     23 |   56 | pose w,x,y,z,px,py,pz (f64) |
//! |     79 |   24 | action axis (f64 ×3) |
//! |    103 |    8 | action rate (f64, deg/s) |
//! |    111 |    1 | action kind (u8) |
//! |    112 |    8 | echo_timestamp   |

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::mathcore::{Pose, UnitQuaternion};

pub const MAGIC: [u8; 4] = *b"CPO1";
pub const CPO_SIZE: usize = 120;
pub const SEQUENCE_OFFSET: usize = 10;

/// Largest deviation of `‖q‖` from 1 accepted for the pose quaternion.
pub const POSE_UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum PacketKind {
    ActionStart = 1,
    PoseSnapshot = 2,
    Ping = 3,
    Pong = 4,
}

impl TryFrom<u8> for PacketKind {
    type Error = ProtocolError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Self::ActionStart),
            2 => Ok(Self::PoseSnapshot),
            3 => Ok(Self::Ping),
            4 => Ok(Self::Pong),
            other => Err(ProtocolError::UnsupportedVersion(format!(
                "unknown packet kind {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ActionKind {
    Rotate = 1,
    Translate = 2,
    Scale = 3,
}

impl TryFrom<u8> for ActionKind {
    type Error = ProtocolError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Self::Rotate),
            2 => Ok(Self::Translate),
            3 => Ok(Self::Scale),
            other => Err(ProtocolError::UnsupportedVersion(format!(
                "unknown action kind {other}"
            ))),
        }
    }
}

/// What the sender is doing to the object. `rate` is in degrees/second for
/// rotations; a zero rate means the object is at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub axis: [f64; 3],
    pub rate: f64,
    pub kind: ActionKind,
}

impl ActionDescriptor {
    pub fn rotate(axis: [f64; 3], rate: f64) -> Self {
        Self {
            axis,
            rate,
            kind: ActionKind::Rotate,
        }
    }

    pub fn at_rest() -> Self {
        Self::rotate([0.0; 3], 0.0)
    }
}

impl Default for ActionDescriptor {
    fn default() -> Self {
        Self::at_rest()
    }
}

/// Per-object control packet. Timestamps are microseconds since the
/// experiment epoch on the sender's clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPacket {
    pub object_id: u32,
    pub sender_id: u16,
    pub sequence: u32,
    pub kind: PacketKind,
    pub send_timestamp: u64,
    pub pose: Pose,
    pub action: ActionDescriptor,
    /// Echoed `send_timestamp` of the PING this PONG answers; 0 otherwise.
    pub echo_timestamp: u64,
}

impl ControlPacket {
    pub fn new(kind: PacketKind, object_id: u32, sender_id: u16, sequence: u32) -> Self {
        Self {
            object_id,
            sender_id,
            sequence,
            kind,
            send_timestamp: 0,
            pose: Pose::identity(),
            action: ActionDescriptor::at_rest(),
            echo_timestamp: 0,
        }
    }

    fn validate(&self) -> Result<(), ProtocolError> {
        let norm = self.pose.orientation.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > POSE_UNIT_TOLERANCE {
            return Err(ProtocolError::InvalidPacket(format!(
                "pose quaternion norm {norm} is not unit"
            )));
        }
        let floats = self
            .pose
            .position
            .iter()
            .chain(self.action.axis.iter())
            .chain(std::iter::once(&self.action.rate));
        if floats.into_iter().any(|v| !v.is_finite()) {
            return Err(ProtocolError::InvalidPacket(
                "non-finite pose or action field".to_string(),
            ));
        }
        Ok(())
    }
}

struct Writer<'a> {
    buf: &'a mut [u8; CPO_SIZE],
    at: usize,
}

impl Writer<'_> {
    fn put(&mut self, bytes: &[u8]) {
        self.buf[self.at..self.at + bytes.len()].copy_from_slice(bytes);
        self.at += bytes.len();
    }

    fn f64(&mut self, v: f64) {
        self.put(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.at..self.at + N].try_into().unwrap();
        self.at += N;
        out
    }

    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }

    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

pub fn encode_cpo(packet: &ControlPacket) -> Result<[u8; CPO_SIZE], ProtocolError> {
    packet.validate()?;
    let mut buf = [0u8; CPO_SIZE];
    let mut w = Writer {
        buf: &mut buf,
        at: 0,
    };
    w.put(&MAGIC);
    w.put(&packet.object_id.to_le_bytes());
    w.put(&packet.sender_id.to_le_bytes());
    w.put(&packet.sequence.to_le_bytes());
    w.put(&[packet.kind as u8]);
    w.put(&packet.send_timestamp.to_le_bytes());
    for c in packet.pose.orientation.components() {
        w.f64(c);
    }
    for c in packet.pose.position {
        w.f64(c);
    }
    for c in packet.action.axis {
        w.f64(c);
    }
    w.f64(packet.action.rate);
    w.put(&[packet.action.kind as u8]);
    w.put(&packet.echo_timestamp.to_le_bytes());
    debug_assert_eq!(w.at, CPO_SIZE);
    Ok(buf)
}

/// Decodes the first [`CPO_SIZE`] bytes of `bytes`.
pub fn decode_cpo(bytes: &[u8]) -> Result<ControlPacket, ProtocolError> {
    if bytes.len() < CPO_SIZE {
        return Err(ProtocolError::Truncated {
            needed: CPO_SIZE,
            got: bytes.len(),
        });
    }
    let mut r = Reader { buf: bytes, at: 0 };
    let magic: [u8; 4] = r.take();
    if magic != MAGIC {
        return Err(ProtocolError::ProtocolMismatch(magic));
    }
    let object_id = r.u32();
    let sender_id = r.u16();
    let sequence = r.u32();
    let kind = PacketKind::try_from(r.u8())?;
    let send_timestamp = r.u64();
    let [w, x, y, z] = [r.f64(), r.f64(), r.f64(), r.f64()];
    let position = [r.f64(), r.f64(), r.f64()];
    let axis = [r.f64(), r.f64(), r.f64()];
    let rate = r.f64();
    let action_kind = ActionKind::try_from(r.u8())?;
    let echo_timestamp = r.u64();

    let orientation = UnitQuaternion::from_unit_components(w, x, y, z, POSE_UNIT_TOLERANCE)
        .map_err(|e| ProtocolError::InvalidPacket(e.to_string()))?;
    let packet = ControlPacket {
        object_id,
        sender_id,
        sequence,
        kind,
        send_timestamp,
        pose: Pose {
            orientation,
            position,
        },
        action: ActionDescriptor {
            axis,
            rate,
            kind: action_kind,
        },
        echo_timestamp,
    };
    packet.validate()?;
    Ok(packet)
}
