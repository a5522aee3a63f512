#![allow(dead_code)]

use rand::Rng;
use scenesync_core::mathcore::{Pose, UnitQuaternion};
use scenesync_core::protocol::{ActionDescriptor, ActionKind, ControlPacket, PacketKind};

pub fn random_packet<R: Rng>(rng: &mut R) -> ControlPacket {
    let kind = [
        PacketKind::ActionStart,
        PacketKind::PoseSnapshot,
        PacketKind::Ping,
        PacketKind::Pong,
    ][rng.random_range(0..4)];
    let mut p = ControlPacket::new(kind, rng.random(), rng.random(), rng.random());
    p.send_timestamp = rng.random();
    p.echo_timestamp = rng.random();
    let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let orientation = UnitQuaternion::from_components(q[0], q[1], q[2], q[3] + 1e-3).unwrap();
    p.pose = Pose::new(
        orientation,
        std::array::from_fn(|_| rng.random_range(-1e3..1e3)),
    )
    .unwrap();
    p.action = ActionDescriptor {
        axis: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
        rate: rng.random_range(-1e3..1e3),
        kind: [ActionKind::Rotate, ActionKind::Translate, ActionKind::Scale]
            [rng.random_range(0..3)],
    };
    p
}

/// Mean and population standard deviation by two plain passes.
pub fn brute_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    let mean = sum / n;
    let mut sq = 0.0;
    for v in values {
        sq += (v - mean) * (v - mean);
    }
    (mean, (sq / n).sqrt())
}
