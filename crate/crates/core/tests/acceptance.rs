//! Acceptance checks. Each check prints one PASS/FAIL line; the process
//! exits non-zero if any check fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenesync_core::harness::{
    run_repetitions, run_scalability, scalability_report, DriftTrace, ExperimentConfig,
};
use scenesync_core::mathcore::{polyfit, predicted_drift, Pose};
use scenesync_core::netsim::{seconds_to_us, LinkModel, Simulation};
use scenesync_core::protocol::{
    action_frequency, classify_consistency, decode_cpo, encode_cpo, upshot_frequency,
    ConsistencyClass, DelayHistory, FrequencyProfile, MeasurementController,
};
use scenesync_core::registration::{estimate_rigid_transform, registration_residual, LandmarkSet};
use scenesync_core::scene::{sample_drift, ActionSpec, ParticipantNode, Role, Strategy};

use common::{brute_stats, random_packet};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn experiment(strategy: Strategy) -> ExperimentConfig {
    ExperimentConfig {
        participants: 2,
        strategy,
        angular_velocity: 100.0,
        num_actions: 50,
        emulated_latency: Some(0.02),
        repetitions: 30,
        ..Default::default()
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Per-action mean drift averaged across traces, action 1 first.
fn per_action_over_seeds(traces: &[DriftTrace]) -> Vec<f64> {
    let n = traces[0].config.num_actions;
    (0..n)
        .map(|k| mean(traces.iter().map(|t| t.per_action_mean()[k].1)))
        .collect()
}

fn overall_mean(traces: &[DriftTrace]) -> f64 {
    mean(
        traces
            .iter()
            .flat_map(|t| t.samples.iter().map(|s| s.alpha)),
    )
}

fn last_40_mean(traces: &[DriftTrace]) -> f64 {
    mean(per_action_over_seeds(traces)[10..].iter().copied())
}

fn no_compensation_accumulation() -> Outcome {
    let start = Instant::now();
    let traces =
        run_repetitions(&experiment(Strategy::NoCompensation)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut finals: Vec<f64> = traces.iter().map(DriftTrace::final_drift).collect();
    finals.sort_by(f64::total_cmp);
    let median = (finals[14] + finals[15]) / 2.0;
    let above = finals.iter().filter(|&&a| a > 210.0).count() as f64 / finals.len() as f64;
    verdict(
        median >= 100.0 && above >= 0.25 && elapsed < 10.0,
        format!(
            "median final drift {median:.3} deg (need >= 100), {:.1}% of seeds above 210 deg (need >= 25%), {elapsed:.2} s (need < 10)",
            above * 100.0
        ),
    )
}

fn event_update_plateau() -> Outcome {
    let traces = run_repetitions(&experiment(Strategy::EventUpdates)).map_err(|e| e.to_string())?;
    let per_action = per_action_over_seeds(&traces);
    let plateau = last_40_mean(&traces);
    let points: Vec<(f64, f64)> = per_action
        .iter()
        .enumerate()
        .map(|(i, a)| (i as f64 + 1.0, *a))
        .collect();
    let slope = polyfit(&points, 1).map_err(|e| e.to_string())?.coefficients[1];
    verdict(
        (5.0..=22.0).contains(&plateau) && slope.abs() < 0.1,
        format!("mean over last 40 actions {plateau:.4} deg (need 5..22), slope {slope:.5} deg/action (need |.| < 0.1)"),
    )
}

fn asa_improvement() -> Outcome {
    let run = |s| run_repetitions(&experiment(s)).map_err(|e| e.to_string());
    let none = overall_mean(&run(Strategy::NoCompensation)?);
    let events = last_40_mean(&run(Strategy::EventUpdates)?);
    let asa = overall_mean(&run(Strategy::Asa)?);
    let (r_none, r_events) = (none / asa, events / asa);
    verdict(
        r_none >= 50.0 && r_events >= 2.5,
        format!(
            "asa mean {asa:.4} deg; no-compensation/asa = {r_none:.1} (need >= 50), event-updates/asa = {r_events:.2} (need >= 2.5)"
        ),
    )
}

fn scalability() -> Outcome {
    let report_at = |omega: f64| {
        let base = ExperimentConfig {
            angular_velocity: omega,
            ..experiment(Strategy::Asa)
        };
        let traces = run_scalability(&base, &[2, 3, 4, 5, 6]).map_err(|e| e.to_string())?;
        scalability_report(&traces).map_err(|e| e.to_string())
    };
    let fast = report_at(100.0)?;
    let slow = report_at(10.0)?;
    let (psi_1, psi_5) = (fast.psi[&2], fast.psi[&6]);
    let ratio = psi_5 / psi_1;
    // Small: the fitted rise from 2 to 6 participants stays under ψ_1 / 2.
    let small = fast.slope * 4.0 < psi_1 / 2.0;
    verdict(
        ratio < 1.5 && psi_5 < 2.0 * psi_1 && fast.slope > 0.0 && small && fast.slope >= slow.slope,
        format!(
            "psi_1 {psi_1:.4} deg, psi_5 {psi_5:.4} deg, ratio {ratio:.3} (need < 1.5), slope {:.3e} deg/participant (need small and > 0), slope at 10 deg/s {:.3e} (need <= slope at 100)",
            fast.slope, slow.slope
        ),
    )
}

fn drift_model_exactness() -> Outcome {
    let z = [0.0, 0.0, 1.0];
    let mut worst: f64 = 0.0;
    for omega in [1.0, 10.0, 100.0] {
        for delay in [0.0002, 0.002, 0.02] {
            let nodes: Vec<ParticipantNode> = (0..2u16)
                .map(|id| {
                    let role = if id == 0 { Role::Actor } else { Role::Observer };
                    let mut n = ParticipantNode::new(
                        id,
                        role,
                        Strategy::NoCompensation,
                        vec![1 - id],
                        MeasurementController::fixed_threshold(),
                    )
                    .unwrap();
                    n.add_object(1, Pose::identity());
                    n
                })
                .collect();
            let mut sim = Simulation::new(nodes, LinkModel::constant(delay));
            let spec = ActionSpec {
                object_id: 1,
                axis: z,
                angular_velocity: omega,
                target_angle: 90.0,
                start_time: 0,
            };
            for (to, p) in sim.node_mut(0).begin_action(&spec, 0).unwrap() {
                sim.send(0, to, &p).unwrap();
            }
            let duration = seconds_to_us(spec.duration());
            for probe in [
                seconds_to_us(delay),
                duration / 4,
                duration / 2,
                duration * 9 / 10,
            ] {
                sim.run_until(probe).unwrap();
                let alpha = sample_drift(sim.node(0), sim.node(1), 1, probe, 1)
                    .unwrap()
                    .alpha;
                worst = worst.max((alpha - predicted_drift(omega, delay)).abs());
            }
        }
    }
    let worked = predicted_drift(10.0, 0.0002);
    verdict(
        worst < 1e-6 && (worked - 0.002).abs() < 1e-15,
        format!("max |alpha - omega*t| over 9 cases {worst:.2e} deg (need < 1e-6), predicted_drift(10, 0.0002) = {worked}"),
    )
}

fn controller_dynamics() -> Outcome {
    let mut h = DelayHistory::new(100);
    let mut c = MeasurementController::adaptive(10, 1, 60).unwrap();
    let mut steps = 0;
    while c.gamma() > 1 && steps < 100 {
        h.record_delay(0.0002).unwrap();
        c.adapt_rate(&h).unwrap();
        steps += 1;
    }
    let mut spread = DelayHistory::new(100);
    for i in 0..50 {
        spread
            .record_delay(if i % 2 == 0 { 0.0002 } else { 0.0004 })
            .unwrap();
    }
    let s = spread.history_stats().unwrap();
    spread.record_delay(s.mean + 5.0 * s.std_dev).unwrap();
    let mut c2 = MeasurementController::adaptive(10, 1, 60).unwrap();
    let after = c2.adapt_rate(&spread).unwrap();
    verdict(
        steps == 9 && c.gamma() == 1 && after == 11,
        format!("constant stream reached gamma 1 in {steps} steps (need 9); spike moved gamma 10 -> {after} (need 11)"),
    )
}

fn rotation_from_quaternion(q: [f64; 4]) -> Matrix3<f64> {
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

fn registration_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_residual: f64 = 0.0;
    let mut worst_brute: f64 = 0.0;
    for _ in 0..1000 {
        let r0 = rotation_from_quaternion(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let t0 = Vector3::from(std::array::from_fn(|_| rng.random_range(-2.0..2.0)));
        // Tetrahedron corners with random offsets stay non-coplanar.
        let base = [
            [0.0, 0.0, 0.0],
            [0.3, 0.0, 0.0],
            [0.0, 0.3, 0.0],
            [0.0, 0.0, 0.3],
        ];
        let xs: Vec<Vector3<f64>> = base
            .iter()
            .map(|b| {
                Vector3::from(std::array::from_fn(|i| {
                    b[i] + rng.random_range(-0.05..0.05)
                }))
            })
            .collect();
        let pairs: Vec<_> = xs.iter().map(|x| (*x, r0 * x + t0)).collect();
        let set = LandmarkSet::new(pairs.clone());
        let est = estimate_rigid_transform(&set).map_err(|e| e.to_string())?;
        let residual = registration_residual(&est, &set);
        worst_residual = worst_residual.max(residual);
        let brute: f64 = pairs
            .iter()
            .map(|(x, y)| {
                (0..3)
                    .map(|i| {
                        let p = est.translation[i]
                            + (0..3).map(|j| est.rotation[(i, j)] * x[j]).sum::<f64>();
                        (y[i] - p).powi(2)
                    })
                    .sum::<f64>()
            })
            .sum();
        worst_brute = worst_brute.max((brute - residual).abs());
    }
    let mirrored = LandmarkSet::from_arrays(&[
        ([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
        ([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]),
        ([0.0, 1.0, 0.0], [0.0, 1.0, 0.0]),
        ([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]),
    ]);
    let det = estimate_rigid_transform(&mirrored)
        .map_err(|e| e.to_string())?
        .rotation
        .determinant();
    verdict(
        worst_residual < 1e-18 && (det - 1.0).abs() < 1e-12 && worst_brute < 1e-20,
        format!(
            "worst residual {worst_residual:.2e} m^2 over 1000 trials (need < 1e-18), mirrored det {det:.12}, residual vs brute force {worst_brute:.1e}"
        ),
    )
}

fn frequency_classification() -> Outcome {
    let nu_0 = upshot_frequency(0.001).map_err(|e| e.to_string())?;
    let tracked = action_frequency(
        &FrequencyProfile::single_participant(0.001, &[30, 30], 1.0),
        0,
    )
    .map_err(|e| e.to_string())?;
    let gui = action_frequency(&FrequencyProfile::single_participant(0.001, &[1], 0.24), 0)
        .map_err(|e| e.to_string())?;
    let high = ConsistencyClass::HighConsistencyAchievable;
    verdict(
        nu_0 == 1000.0
            && tracked == 30.0
            && classify_consistency(tracked, nu_0) == high
            && (gui - 1.0 / 0.24).abs() < 1e-12
            && classify_consistency(gui, nu_0) == high,
        format!(
            "nu_0 {nu_0}, tracked nu_k {tracked} -> {}, GUI nu_k {gui:.4} -> {}",
            classify_consistency(tracked, nu_0),
            classify_consistency(gui, nu_0)
        ),
    )
}

fn codec_and_determinism() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut lossy = 0;
    for _ in 0..100_000 {
        let p = random_packet(&mut rng);
        if decode_cpo(&encode_cpo(&p).map_err(|e| e.to_string())?).ok() != Some(p) {
            lossy += 1;
        }
    }

    let config = ExperimentConfig {
        seed: 17,
        ..experiment(Strategy::Asa)
    };
    let a = scenesync_core::harness::run_experiment(&config).map_err(|e| e.to_string())?;
    let b = scenesync_core::harness::run_experiment(&config).map_err(|e| e.to_string())?;
    let identical = a.to_csv_string() == b.to_csv_string();

    let mut h = DelayHistory::new(100);
    let mut all = Vec::new();
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let v = rng.random_range(0.0..0.05);
        h.record_delay(v).map_err(|e| e.to_string())?;
        all.push(v);
        let (m, sd) = brute_stats(&all[all.len().saturating_sub(100)..]);
        let s = h.history_stats().map_err(|e| e.to_string())?;
        if (s.mean - m).abs() > 1e-12 || (s.std_dev - sd).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    verdict(
        lossy == 0 && identical && mismatches == 0,
        format!(
            "{lossy} lossy round-trips of 100000, equal-seed CSV identical: {identical}, {mismatches} window-statistics mismatches of 10000"
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("no-compensation accumulation", no_compensation_accumulation),
        ("event-update plateau", event_update_plateau),
        ("asa improvement ratios", asa_improvement),
        ("participant scalability", scalability),
        ("drift model exactness", drift_model_exactness),
        ("controller dynamics", controller_dynamics),
        ("registration oracle", registration_oracle),
        ("frequency classification", frequency_classification),
        ("codec and determinism", codec_and_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of 9 acceptance checks passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
