use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::io::per_action_means;
use super::{ExperimentConfig, HarnessError};
use crate::mathcore::Pose;
use crate::netsim::{derive_seed, seconds_to_us, NodeId, Simulation};
use crate::protocol::MeasurementController;
use crate::scene::{
    sample_drift_local, ActionSpec, DriftSample, ParticipantNode, Role, Strategy, MEASUREMENT_TIMER,
};

pub const CSV_HEADER: &str = "action_index,sim_time_us,observer_id,alpha_deg";

/// Object all experiments act on.
pub const SHARED_OBJECT: u32 = 1;
pub const ACTOR: NodeId = 0;

const LINK_STREAM: u64 = 0x4C49_4E4B;
const ACTION_STREAM: u64 = 0x4143_5431;
const REPETITION_STREAM: u64 = 0x5245_5000;
const SWEEP_STREAM: u64 = 0x5357_0000;

/// Random rotations: target angle range in degrees.
pub const TARGET_ANGLE_RANGE: (f64, f64) = (30.0, 180.0);

/// Drift samples from one experiment run.
///
/// Each action contributes two sampling instants (generation and
/// completion) per observer. Action indices start at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTrace {
    pub config: ExperimentConfig,
    /// Angular velocity actually simulated, after latency emulation.
    pub effective_velocity: f64,
    pub samples: Vec<DriftSample>,
}

impl DriftTrace {
    pub fn observers(&self) -> BTreeMap<NodeId, Vec<DriftSample>> {
        let mut out: BTreeMap<NodeId, Vec<DriftSample>> = BTreeMap::new();
        for s in &self.samples {
            out.entry(s.observer_id).or_default().push(*s);
        }
        out
    }

    /// Mean α per action index, over observers and sampling instants.
    pub fn per_action_mean(&self) -> Vec<(usize, f64)> {
        per_action_means(&self.samples)
    }

    pub fn mean_drift(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.alpha).sum::<f64>() / self.samples.len() as f64
    }

    /// Mean over observers of the drift at the last sampling instant.
    pub fn final_drift(&self) -> f64 {
        let Some(last) = self.samples.iter().map(|s| s.sim_time).max() else {
            return 0.0;
        };
        let finals: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.sim_time == last)
            .map(|s| s.alpha)
            .collect();
        finals.iter().sum::<f64>() / finals.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{}",
                s.action_index, s.sim_time, s.observer_id, s.alpha
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

fn build_nodes(config: &ExperimentConfig) -> Result<Vec<ParticipantNode>, HarnessError> {
    let n = config.participants as NodeId;
    (0..n)
        .map(|id| {
            let role = if id == ACTOR {
                Role::Actor
            } else {
                Role::Observer
            };
            let controller = match config.strategy {
                Strategy::Asa => MeasurementController::adaptive(
                    config.gamma_start,
                    config.gamma_min,
                    config.gamma_max,
                )?,
                _ => MeasurementController::fixed_threshold(),
            };
            let peers = (0..n).filter(|&p| p != id).collect();
            let mut node = ParticipantNode::new(id, role, config.strategy, peers, controller)?
                .with_history_capacity(config.history_capacity);
            node.add_object(SHARED_OBJECT, Pose::identity());
            Ok(node)
        })
        .collect()
}

fn sample_all(
    sim: &Simulation<ParticipantNode>,
    action_index: usize,
    samples: &mut Vec<DriftSample>,
) -> Result<(), HarnessError> {
    let t = sim.now();
    let actor = sim.node(ACTOR);
    for id in 1..sim.node_count() as NodeId {
        samples.push(sample_drift_local(
            actor,
            sim.local_now(ACTOR),
            sim.node(id),
            sim.local_now(id),
            SHARED_OBJECT,
            action_index,
            t,
        )?);
    }
    Ok(())
}

/// Runs one experiment with `config.seed`.
///
/// The actor performs `num_actions` random rotations: axis uniform over the
/// Cartesian axes, target angle uniform in [`TARGET_ANGLE_RANGE`], each
/// followed by `settle` seconds at rest. Drift is sampled for every observer
/// when an action is generated and when it completes.
pub fn run_experiment(config: &ExperimentConfig) -> Result<DriftTrace, HarnessError> {
    config.validate()?;
    let setup = config.effective_setup(derive_seed(config.seed, LINK_STREAM));
    let omega = setup.angular_velocity;
    let mut sim = Simulation::new(build_nodes(config)?, setup.link);
    if config.strategy == Strategy::Asa {
        for id in 0..config.participants as NodeId {
            sim.schedule_timer(id, 0, MEASUREMENT_TIMER)?;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, ACTION_STREAM));
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let settle_us = seconds_to_us(config.settle);
    let mut samples = Vec::with_capacity(config.num_actions * 2 * (config.participants - 1));
    let mut t = seconds_to_us(config.warmup);

    for k in 1..=config.num_actions {
        let axis = axes[rng.random_range(0..3)];
        let wanted = rng.random_range(TARGET_ANGLE_RANGE.0..=TARGET_ANGLE_RANGE.1);
        // Whole microseconds, with the target adjusted to match exactly.
        let duration_us = seconds_to_us(wanted / omega).max(1);
        let target_angle = (omega * duration_us as f64 * 1e-6).min(360.0);
        let spec = ActionSpec {
            object_id: SHARED_OBJECT,
            axis,
            angular_velocity: omega,
            target_angle,
            start_time: t,
        };

        sim.run_until(t)?;
        sample_all(&sim, k, &mut samples)?;
        let now = sim.local_now(ACTOR);
        for (to, packet) in sim.node_mut(ACTOR).begin_action(&spec, now)? {
            sim.send(ACTOR, to, &packet)?;
        }

        let end = t + duration_us;
        sim.run_until(end)?;
        sample_all(&sim, k, &mut samples)?;
        let now = sim.local_now(ACTOR);
        for (to, packet) in sim.node_mut(ACTOR).complete_action(SHARED_OBJECT, now)? {
            sim.send(ACTOR, to, &packet)?;
        }
        t = end + settle_us;
    }

    Ok(DriftTrace {
        config: config.clone(),
        effective_velocity: omega,
        samples,
    })
}

/// Seed used for repetition `index` of a config.
pub fn repetition_seed(base: u64, index: usize) -> u64 {
    derive_seed(base, REPETITION_STREAM + index as u64)
}

/// `config.repetitions` independent runs, in repetition order.
pub fn run_repetitions(config: &ExperimentConfig) -> Result<Vec<DriftTrace>, HarnessError> {
    config.validate()?;
    (0..config.repetitions)
        .into_par_iter()
        .map(|r| {
            run_experiment(&ExperimentConfig {
                seed: repetition_seed(config.seed, r),
                ..config.clone()
            })
        })
        .collect()
}

/// One trace per velocity, seeds derived from the base seed and the
/// velocity's position in the list.
pub fn sweep_velocities(
    base: &ExperimentConfig,
    velocities: &[f64],
) -> Result<Vec<DriftTrace>, HarnessError> {
    if velocities.is_empty() {
        return Err(HarnessError::Config(vec![
            "velocities: at least one velocity is required".to_string(),
        ]));
    }
    let configs: Vec<ExperimentConfig> = velocities
        .iter()
        .enumerate()
        .map(|(i, &v)| ExperimentConfig {
            angular_velocity: v,
            seed: derive_seed(base.seed, SWEEP_STREAM + i as u64),
            ..base.clone()
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    configs.par_iter().map(run_experiment).collect()
}
