//! Rigid homogeneous transforms.
//!
//! A [`Pose`] is a 4×4 homogeneous matrix with an orthonormal, right-handed
//! rotation block and translation in meters. On the wire a pose is a flat
//! 16-element row-major array.

use std::fmt;

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Tolerance used when validating rotation blocks.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PoseError {
    #[error("pose must have exactly 16 elements, got {0}")]
    WrongLength(usize),
    #[error("pose contains a non-finite element")]
    NonFinite,
    #[error("bottom row must be exactly (0, 0, 0, 1)")]
    BottomRow,
    #[error("rotation block is not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("rotation block determinant is {0}, expected 1")]
    NotProper(f64),
}

#[derive(Clone, Copy, PartialEq)]
pub struct Pose(Matrix4<f64>);

impl Pose {
    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        let mut m = Matrix4::identity();
        m[(0, 3)] = x;
        m[(1, 3)] = y;
        m[(2, 3)] = z;
        Self(m)
    }

    /// Translation followed by a fixed-axis roll/pitch/yaw rotation (radians).
    pub fn from_xyz_rpy(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Self {
        let r = Rotation3::from_euler_angles(roll, pitch, yaw);
        Self::from_parts(r.matrix(), Vector3::new(x, y, z))
    }

    fn from_parts(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self(m)
    }

    /// Validates and builds a pose from a row-major 16-element slice.
    pub fn from_row_major(values: &[f64]) -> Result<Self, PoseError> {
        if values.len() != 16 {
            return Err(PoseError::WrongLength(values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(PoseError::NonFinite);
        }
        let m = Matrix4::from_row_slice(values);
        let pose = Self(m);
        pose.validate()?;
        Ok(pose)
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.0[(r, c)];
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), PoseError> {
        let m = &self.0;
        if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
            return Err(PoseError::BottomRow);
        }
        let r = self.rotation();
        let deviation = (r.transpose() * r - Matrix3::identity()).abs().max();
        if deviation > ROTATION_TOLERANCE {
            return Err(PoseError::NotOrthonormal(deviation));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(PoseError::NotProper(det));
        }
        Ok(())
    }

    /// `self ∘ other`: express `other` (given in this pose's frame) in the parent frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose(self.0 * other.0)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation().transpose();
        let t = -(rt * self.translation());
        Self::from_parts(&rt, t)
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn xyz(&self) -> [f64; 3] {
        let t = self.translation();
        [t.x, t.y, t.z]
    }

    pub fn with_translation(&self, x: f64, y: f64, z: f64) -> Pose {
        let mut m = self.0;
        m[(0, 3)] = x;
        m[(1, 3)] = y;
        m[(2, 3)] = z;
        Pose(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// Euclidean distance between the two translations.
    pub fn distance(&self, other: &Pose) -> f64 {
        (self.translation() - other.translation()).norm()
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Pose) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Debug for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pose{:?}", self.to_row_major())
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = self.xyz();
        let r = Rotation3::from_matrix_unchecked(self.rotation());
        let (roll, pitch, yaw) = r.euler_angles();
        // avoid printing "-0.000000"
        let [x, y, z, roll, pitch, yaw] = [x, y, z, roll, pitch, yaw].map(|v| if v.abs() < 5e-7 { 0.0 } else { v });
        write!(
            f,
            "xyz=({x:.6}, {y:.6}, {z:.6}) rpy=({roll:.6}, {pitch:.6}, {yaw:.6})"
        )
    }
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        Pose::from_row_major(&values).map_err(serde::de::Error::custom)
    }
}
