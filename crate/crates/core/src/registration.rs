//! Least-squares rigid registration of real-object landmarks onto
//! virtual-model landmarks.
//!
//! Given pairs `(x_i, y_i)` the estimator returns the proper rotation `R` and
//! translation `t` minimizing `Σ ‖y_i − R x_i − t‖²`. Correspondence is by
//! input order.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Ratio of the second to the first singular value of the centered source
/// points below which they are considered collinear.
const COLLINEAR_TOLERANCE: f64 = 1e-10;

pub const MIN_LANDMARKS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistrationError {
    #[error("need at least {MIN_LANDMARKS} landmark pairs, got {0}")]
    InsufficientLandmarks(usize),
    #[error("degenerate landmark configuration: {0}")]
    DegenerateConfiguration(String),
}

/// Corresponding landmark pairs: `x` on the real object, `y` on the model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkSet {
    pairs: Vec<(Vector3<f64>, Vector3<f64>)>,
}

impl LandmarkSet {
    pub fn new(pairs: Vec<(Vector3<f64>, Vector3<f64>)>) -> Self {
        Self { pairs }
    }

    pub fn from_arrays(pairs: &[([f64; 3], [f64; 3])]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|(x, y)| (Vector3::from(*x), Vector3::from(*y)))
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[(Vector3<f64>, Vector3<f64>)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn centroids(&self) -> (Vector3<f64>, Vector3<f64>) {
        let n = self.pairs.len() as f64;
        let (sx, sy) = self
            .pairs
            .iter()
            .fold((Vector3::zeros(), Vector3::zeros()), |(sx, sy), (x, y)| {
                (sx + x, sy + y)
            });
        (sx / n, sy / n)
    }

    /// Checks the count and that the source points span at least a line's
    /// complement (rank of centered points ≥ 2).
    pub fn validate(&self) -> Result<(), RegistrationError> {
        if self.pairs.len() < MIN_LANDMARKS {
            return Err(RegistrationError::InsufficientLandmarks(self.pairs.len()));
        }
        if self
            .pairs
            .iter()
            .any(|(x, y)| x.iter().chain(y.iter()).any(|c| !c.is_finite()))
        {
            return Err(RegistrationError::DegenerateConfiguration(
                "non-finite landmark coordinate".to_string(),
            ));
        }
        let (x_bar, _) = self.centroids();
        let scatter = self.pairs.iter().fold(Matrix3::zeros(), |acc, (x, _)| {
            let d = x - x_bar;
            acc + d * d.transpose()
        });
        // Singular values of the scatter matrix are the squares of those of
        // the centered point matrix.
        let mut sv: Vec<f64> = scatter
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.max(0.0))
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        if sv[0] == 0.0 || (sv[1] / sv[0]).sqrt() < COLLINEAR_TOLERANCE {
            return Err(RegistrationError::DegenerateConfiguration(
                "real-object landmarks are coincident or collinear".to_string(),
            ));
        }
        Ok(())
    }
}

/// `y = R x + t`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn transform_point(transform: &RigidTransform, p: &Vector3<f64>) -> Vector3<f64> {
    transform.apply(p)
}

/// Σ ‖y_i − R x_i − t‖², in square meters.
pub fn registration_residual(transform: &RigidTransform, landmarks: &LandmarkSet) -> f64 {
    landmarks
        .pairs
        .iter()
        .map(|(x, y)| (y - transform.apply(x)).norm_squared())
        .sum()
}

/// SVD solution of the rigid least-squares problem.
///
/// `H = Σ (x_i − x̄)(y_i − ȳ)ᵀ = U Σ Vᵀ`, `R = V diag(1, 1, det(V Uᵀ)) Uᵀ`,
/// `t = ȳ − R x̄`. The determinant term keeps `R` a proper rotation when the
/// best orthogonal fit would be a reflection.
pub fn estimate_rigid_transform(
    landmarks: &LandmarkSet,
) -> Result<RigidTransform, RegistrationError> {
    landmarks.validate()?;
    let (x_bar, y_bar) = landmarks.centroids();
    let h = landmarks
        .pairs
        .iter()
        .fold(Matrix3::zeros(), |acc, (x, y)| {
            acc + (x - x_bar) * (y - y_bar).transpose()
        });

    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => {
            return Err(RegistrationError::DegenerateConfiguration(
                "SVD of the cross-covariance did not converge".to_string(),
            ))
        }
    };
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d));
    let rotation = v * correction * u.transpose();
    let translation = y_bar - rotation * x_bar;

    Ok(RigidTransform {
        rotation,
        translation,
    })
}
