//! Rigid transforms and empirical distributions over them.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A proper rigid transform: rotation (orthonormal, det +1) plus translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let p = Self {
            rotation,
            translation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rotation = Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(axis),
            angle,
        );
        Self {
            rotation: rotation.into_inner(),
            translation,
        }
    }

    /// Build from a wxyz quaternion (normalized on the way in) and a translation.
    pub fn from_quaternion(wxyz: [f64; 4], translation: [f64; 3]) -> Result<Self> {
        let [w, x, y, z] = wxyz;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if q.norm() == 0.0 || !q.norm().is_finite() {
            return Err(Error::InvalidParameter("quaternion must be nonzero and finite".into()));
        }
        let uq = UnitQuaternion::from_quaternion(q);
        Ok(Self {
            rotation: uq.to_rotation_matrix().into_inner(),
            translation: Vector3::new(translation[0], translation[1], translation[2]),
        })
    }

    pub fn to_quaternion(&self) -> [f64; 4] {
        let uq = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
            self.rotation,
        ));
        let q = uq.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    fn validate(&self) -> Result<()> {
        let rt_r = self.rotation.transpose() * self.rotation;
        if (rt_r - Matrix3::identity()).norm() > 1e-9 {
            return Err(Error::InvalidParameter("rotation is not orthonormal".into()));
        }
        if (self.rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("rotation determinant is not +1".into()));
        }
        if !self.translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("translation is not finite".into()));
        }
        Ok(())
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self` after `other`: `(self * other)(p) = self(other(p))`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation about +z extracted from the rotation matrix, in radians.
    pub fn yaw(&self) -> f64 {
        self.rotation[(1, 0)].atan2(self.rotation[(0, 0)])
    }

    /// Frobenius norm of the rotation difference.
    pub fn chordal_distance(&self, other: &Pose) -> f64 {
        (self.rotation - other.rotation).norm()
    }

    pub fn translation_distance(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }
}

/// Wire format: quaternion (wxyz) plus translation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoseRecord {
    pub quaternion: [f64; 4],
    pub translation: [f64; 3],
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        Self {
            quaternion: p.to_quaternion(),
            translation: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

impl TryFrom<&PoseRecord> for Pose {
    type Error = Error;
    fn try_from(r: &PoseRecord) -> Result<Pose> {
        Pose::from_quaternion(r.quaternion, r.translation)
    }
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        PoseRecord::from(self).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Pose, D::Error> {
        let rec = PoseRecord::deserialize(de)?;
        Pose::try_from(&rec).map_err(serde::de::Error::custom)
    }
}

/// A multiset of rigid transforms: distinct samples with positive integer
/// multiplicities.
#[derive(Debug, Clone, Default)]
pub struct PoseDistribution {
    pub samples: Vec<Pose>,
    pub multiplicities: Vec<u64>,
}

/// Tolerances under which two poses are considered the same mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MergeTolerance {
    pub translation: f64,
    pub chordal: f64,
}

impl Default for MergeTolerance {
    fn default() -> Self {
        Self {
            translation: 1e-6,
            chordal: 1e-6,
        }
    }
}

impl PoseDistribution {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.multiplicities.iter().sum()
    }

    /// Add a pose, merging it into an existing sample when both the
    /// translation and chordal distances are within tolerance.
    pub fn push_merged(&mut self, pose: Pose, multiplicity: u64, tol: MergeTolerance) {
        debug_assert!(multiplicity >= 1);
        for (i, existing) in self.samples.iter().enumerate() {
            if existing.translation_distance(&pose) <= tol.translation
                && existing.chordal_distance(&pose) <= tol.chordal
            {
                self.multiplicities[i] += multiplicity;
                return;
            }
        }
        self.samples.push(pose);
        self.multiplicities.push(multiplicity);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Pose, u64)> {
        self.samples.iter().zip(self.multiplicities.iter().copied())
    }

    /// JSON wire format: a list of `{quaternion, translation, multiplicity}`.
    pub fn to_json(&self) -> Result<String> {
        let records: Vec<DistributionRecord> = self
            .iter()
            .map(|(p, m)| DistributionRecord {
                quaternion: p.to_quaternion(),
                translation: [p.translation.x, p.translation.y, p.translation.z],
                multiplicity: m,
            })
            .collect();
        Ok(serde_json::to_string_pretty(&records)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let records: Vec<DistributionRecord> = serde_json::from_str(json)?;
        let mut out = Self::default();
        for r in &records {
            if r.multiplicity == 0 {
                return Err(Error::InvalidParameter("multiplicity must be >= 1".into()));
            }
            out.samples.push(Pose::from_quaternion(r.quaternion, r.translation)?);
            out.multiplicities.push(r.multiplicity);
        }
        Ok(out)
    }

    /// Flat CSV with a `qw,qx,qy,qz,tx,ty,tz,mult` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("qw,qx,qy,qz,tx,ty,tz,mult\n");
        for (p, m) in self.iter() {
            let [w, x, y, z] = p.to_quaternion();
            let t = p.translation;
            out.push_str(&format!(
                "{w},{x},{y},{z},{},{},{},{m}\n",
                t.x, t.y, t.z
            ));
        }
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DistributionRecord {
    quaternion: [f64; 4],
    translation: [f64; 3],
    multiplicity: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compose_and_inverse() {
        let a = Pose::from_axis_angle(Vector3::z(), 0.7, Vector3::new(1.0, -2.0, 0.5));
        let b = Pose::from_axis_angle(Vector3::x(), -0.3, Vector3::new(0.0, 1.0, 2.0));
        let p = Vector3::new(0.2, 0.4, -0.6);
        let lhs = a.compose(&b).apply(&p);
        let rhs = a.apply(&b.apply(&p));
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);

        let id = a.compose(&a.inverse());
        assert_relative_eq!(id.rotation, Matrix3::identity(), epsilon = 1e-12);
        assert_relative_eq!(id.translation, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn yaw_extraction() {
        for deg in [-135.0f64, -45.0, 0.0, 45.0, 90.0, 170.0] {
            let p = Pose::from_axis_angle(Vector3::z(), deg.to_radians(), Vector3::zeros());
            assert_relative_eq!(p.yaw().to_degrees(), deg, epsilon = 1e-9);
        }
    }

    #[test]
    fn chordal_distance_half_turn() {
        let a = Pose::identity();
        let b = Pose::from_axis_angle(Vector3::z(), std::f64::consts::PI, Vector3::zeros());
        assert_relative_eq!(a.chordal_distance(&b), 8.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn quaternion_round_trip() {
        let p = Pose::from_axis_angle(
            Vector3::new(0.3, -0.5, 0.8),
            1.2,
            Vector3::new(0.1, 0.2, 0.3),
        );
        let q = Pose::from_quaternion(
            p.to_quaternion(),
            [p.translation.x, p.translation.y, p.translation.z],
        )
        .unwrap();
        assert_relative_eq!(p.rotation, q.rotation, epsilon = 1e-12);
    }

    #[test]
    fn rejects_improper_rotation() {
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(Pose::new(reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn distribution_merge_and_io() {
        let mut d = PoseDistribution::default();
        let tol = MergeTolerance::default();
        let a = Pose::from_axis_angle(Vector3::z(), 0.5, Vector3::new(1.0, 0.0, 0.0));
        d.push_merged(a, 3, tol);
        d.push_merged(a, 2, tol);
        let b = Pose::from_axis_angle(Vector3::z(), 0.6, Vector3::new(1.0, 0.0, 0.0));
        d.push_merged(b, 1, tol);
        assert_eq!(d.len(), 2);
        assert_eq!(d.multiplicities, vec![5, 1]);
        assert_eq!(d.total_multiplicity(), 6);

        let json = d.to_json().unwrap();
        let back = PoseDistribution::from_json(&json).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.multiplicities, vec![5, 1]);
        assert_relative_eq!(back.samples[0].rotation, d.samples[0].rotation, epsilon = 1e-12);

        let csv = d.to_csv();
        assert!(csv.starts_with("qw,qx,qy,qz,tx,ty,tz,mult\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
