use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use super::MathError;

/// Tolerance on `‖axis‖ = 1` accepted by [`UnitQuaternion::from_axis_angle`].
pub const AXIS_TOLERANCE: f64 = 1e-9;

/// A rotation stored as a unit quaternion in `(w, x, y, z)` order.
///
/// Hamilton convention, right-handed frames. `w` is the scalar part. The sign
/// of the quaternion is preserved by every operation (no canonicalization to
/// `w >= 0`), so `q` and `-q` are distinct values even though they encode the
/// same rotation. [`drift_angle`] relies on that.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a quaternion from raw components, normalizing them.
    pub fn from_components(w: f64, x: f64, y: f64, z: f64) -> Result<Self, MathError> {
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < f64::EPSILON {
            return Err(MathError::InvalidArgument(format!(
                "quaternion ({w}, {x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(Self {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Accepts components that are already unit within `tolerance` and keeps
    /// them bit-for-bit.
    pub fn from_unit_components(
        w: f64,
        x: f64,
        y: f64,
        z: f64,
        tolerance: f64,
    ) -> Result<Self, MathError> {
        let q = Self { w, x, y, z };
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > tolerance {
            return Err(MathError::InvalidArgument(format!(
                "quaternion norm {norm} is not within {tolerance} of 1"
            )));
        }
        Ok(q)
    }

    /// Half-angle construction. `angle_deg` is in degrees.
    pub fn from_axis_angle(axis: [f64; 3], angle_deg: f64) -> Result<Self, MathError> {
        let axis_norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !axis_norm.is_finite() || (axis_norm - 1.0).abs() > AXIS_TOLERANCE {
            return Err(MathError::InvalidArgument(format!(
                "rotation axis must be unit length, got norm {axis_norm}"
            )));
        }
        if !angle_deg.is_finite() {
            return Err(MathError::InvalidArgument(format!(
                "rotation angle must be finite, got {angle_deg}"
            )));
        }
        let half = angle_deg.to_radians() / 2.0;
        let (s, c) = half.sin_cos();
        Self::from_components(c, axis[0] * s, axis[1] * s, axis[2] * s)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    /// `[w, x, y, z]`
    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Conjugate, which is the inverse for unit quaternions.
    pub fn inverse(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Rotates a vector by this quaternion (`q v q⁻¹`).
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let [qw, qx, qy, qz] = self.components();
        // t = 2 * (q_vec × v)
        let tx = 2.0 * (qy * v[2] - qz * v[1]);
        let ty = 2.0 * (qz * v[0] - qx * v[2]);
        let tz = 2.0 * (qx * v[1] - qy * v[0]);
        [
            v[0] + qw * tx + (qy * tz - qz * ty),
            v[1] + qw * ty + (qz * tx - qx * tz),
            v[2] + qw * tz + (qx * ty - qy * tx),
        ]
    }

    fn hamilton(a: &Self, b: &Self) -> [f64; 4] {
        [
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        ]
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl fmt::Debug for UnitQuaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Quat({}, {}, {}, {})", self.w, self.x, self.y, self.z)
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    /// Hamilton product, renormalized. `(a * b).rotate(v) == a.rotate(b.rotate(v))`.
    fn mul(self, rhs: UnitQuaternion) -> UnitQuaternion {
        let [w, x, y, z] = Self::hamilton(&self, &rhs);
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        UnitQuaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        }
    }
}

pub fn quat_from_axis_angle(axis: [f64; 3], angle_deg: f64) -> Result<UnitQuaternion, MathError> {
    UnitQuaternion::from_axis_angle(axis, angle_deg)
}

pub fn quat_multiply(a: UnitQuaternion, b: UnitQuaternion) -> UnitQuaternion {
    a * b
}

pub fn quat_inverse(q: UnitQuaternion) -> UnitQuaternion {
    q.inverse()
}

/// The rotation `q_E` that takes the replica orientation `q_c` onto the
/// authoritative orientation `q_s`: `q_E = q_s q_c⁻¹`, so `q_E q_c = q_s`.
pub fn correction_quaternion(q_s: UnitQuaternion, q_c: UnitQuaternion) -> UnitQuaternion {
    q_s * q_c.inverse()
}

/// Drift angle in degrees, `2 acos(w)` of the correction quaternion.
///
/// The scalar part is clamped to `[-1, 1]` but its sign is kept, so the
/// result spans `[0°, 360°]`. Use [`minimal_angle`] for the folded value.
pub fn drift_angle(q_e: UnitQuaternion) -> f64 {
    2.0 * q_e.w.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Folds an angle from `[0°, 360°]` onto the shortest rotation, `[0°, 180°]`.
pub fn minimal_angle(alpha_deg: f64) -> f64 {
    alpha_deg.min(360.0 - alpha_deg)
}

/// Expected angular drift for an action of angular velocity `omega`
/// (degrees/second) seen through a delay of `delay` seconds.
pub fn predicted_drift(omega: f64, delay: f64) -> f64 {
    omega * delay
}

/// Orientation and position of a shared object. Position is in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub orientation: UnitQuaternion,
    pub position: [f64; 3],
}

impl Pose {
    pub fn new(orientation: UnitQuaternion, position: [f64; 3]) -> Result<Self, MathError> {
        if position.iter().any(|c| !c.is_finite()) {
            return Err(MathError::InvalidArgument(format!(
                "pose position must be finite, got {position:?}"
            )));
        }
        Ok(Self {
            orientation,
            position,
        })
    }

    pub fn identity() -> Self {
        Self::default()
    }
}
