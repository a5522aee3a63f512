use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use scenesync_core::registration::{
    estimate_rigid_transform, registration_residual, transform_point, LandmarkSet,
    RegistrationError, RigidTransform,
};

/// Rotation matrix from a unit quaternion, written out by hand.
fn matrix_from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Matrix3<f64> {
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

fn proper_rotation() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("non-degenerate", |q| {
            q.iter().map(|c| c * c).sum::<f64>() > 1e-3
        })
        .prop_map(|q| {
            let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            matrix_from_quaternion(q[0] / n, q[1] / n, q[2] / n, q[3] / n)
        })
}

fn cloud(n: usize) -> impl Strategy<Value = Vec<Vector3<f64>>> {
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(Vector3::from).collect::<Vec<_>>())
        .prop_filter("well spread", |pts| spread(pts) > 0.05)
}

/// Smallest singular value of the centered cloud, relative to the largest.
fn spread(pts: &[Vector3<f64>]) -> f64 {
    let c = pts.iter().sum::<Vector3<f64>>() / pts.len() as f64;
    let m = pts
        .iter()
        .fold(Matrix3::zeros(), |a, p| a + (p - c) * (p - c).transpose());
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    (ev[0].max(0.0) / ev[2]).sqrt()
}

fn brute_residual(
    r: &Matrix3<f64>,
    t: &Vector3<f64>,
    pairs: &[(Vector3<f64>, Vector3<f64>)],
) -> f64 {
    let mut total = 0.0;
    for (x, y) in pairs {
        for i in 0..3 {
            let mut p = t[i];
            for j in 0..3 {
                p += r[(i, j)] * x[j];
            }
            total += (y[i] - p) * (y[i] - p);
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn recovers_exact_transform(r in proper_rotation(), t in prop::array::uniform3(-5.0f64..5.0),
                                xs in cloud(4)) {
        let t = Vector3::from(t);
        let set = LandmarkSet::new(xs.iter().map(|x| (*x, r * x + t)).collect());
        let est = estimate_rigid_transform(&set).unwrap();
        prop_assert!((est.rotation - r).abs().max() < 1e-9);
        prop_assert!((est.translation - t).abs().max() < 1e-9);
        prop_assert!(registration_residual(&est, &set) < 1e-18);
    }

    #[test]
    fn result_is_a_proper_rotation(xs in cloud(6), ys in cloud(6)) {
        let set = LandmarkSet::new(xs.into_iter().zip(ys).collect());
        let est = estimate_rigid_transform(&set).unwrap();
        prop_assert!((est.rotation.determinant() - 1.0).abs() < 1e-9);
        prop_assert!((est.rotation.transpose() * est.rotation - Matrix3::identity()).abs().max() < 1e-9);
    }

    /// Transforming the targets by (R1, t1) composes with the estimate.
    #[test]
    fn equivariant_under_target_motion(r0 in proper_rotation(), r1 in proper_rotation(),
                                       t1 in prop::array::uniform3(-2.0f64..2.0), xs in cloud(5)) {
        let t1 = Vector3::from(t1);
        let set = LandmarkSet::new(xs.iter().map(|x| (*x, r0 * x)).collect());
        let moved = LandmarkSet::new(xs.iter().map(|x| (*x, r1 * (r0 * x) + t1)).collect());
        let est = estimate_rigid_transform(&moved).unwrap();
        let base = estimate_rigid_transform(&set).unwrap();
        prop_assert!((est.rotation - r1 * base.rotation).abs().max() < 1e-9);
    }

    #[test]
    fn residual_matches_brute_force(r in proper_rotation(), t in prop::array::uniform3(-1.0f64..1.0),
                                    xs in cloud(5), ys in cloud(5)) {
        let pairs: Vec<_> = xs.into_iter().zip(ys).collect();
        let set = LandmarkSet::new(pairs.clone());
        let tr = RigidTransform::new(r, Vector3::from(t));
        let fast = registration_residual(&tr, &set);
        let slow = brute_residual(&r, &tr.translation, &pairs);
        prop_assert!((fast - slow).abs() <= 1e-12 * slow.max(1.0));
        let p = transform_point(&tr, &pairs[0].0);
        prop_assert!((p - (r * pairs[0].0 + tr.translation)).norm() < 1e-15);
    }
}

#[test]
fn noisy_landmarks_stay_close() {
    let r = matrix_from_quaternion(0.8, 0.0, 0.6, 0.0);
    let t = Vector3::new(0.3, -0.2, 1.0);
    let xs = [
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(0.1, 0.0, 0.0),
        Vector3::new(0.0, 0.1, 0.0),
        Vector3::new(0.0, 0.0, 0.1),
    ];
    let noise = [1e-4, -2e-4, 1.5e-4, -0.5e-4];
    let set = LandmarkSet::new(
        xs.iter()
            .zip(noise)
            .map(|(x, e)| (*x, r * x + t + Vector3::repeat(e)))
            .collect(),
    );
    let est = estimate_rigid_transform(&set).unwrap();
    assert!((est.rotation - r).abs().max() < 1e-2);
    assert!(registration_residual(&est, &set) < 1e-6);
}

#[test]
fn mirrored_targets_still_give_proper_rotation() {
    let xs = [
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(0.0, 2.0, 0.0),
        Vector3::new(0.0, 0.0, 3.0),
    ];
    let set = LandmarkSet::new(
        xs.iter()
            .map(|x| (*x, Vector3::new(-x[0], x[1], x[2])))
            .collect(),
    );
    let est = estimate_rigid_transform(&set).unwrap();
    assert!((est.rotation.determinant() - 1.0).abs() < 1e-12);
}

#[test]
fn degenerate_sets() {
    let two = LandmarkSet::from_arrays(&[([0.0; 3], [0.0; 3]), ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])]);
    assert_eq!(
        estimate_rigid_transform(&two).unwrap_err(),
        RegistrationError::InsufficientLandmarks(2)
    );
    let line = LandmarkSet::from_arrays(&[
        ([0.0; 3], [0.0; 3]),
        ([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ([2.0, 0.0, 0.0], [2.0, 0.0, 0.0]),
    ]);
    assert!(matches!(
        estimate_rigid_transform(&line),
        Err(RegistrationError::DegenerateConfiguration(_))
    ));
}
