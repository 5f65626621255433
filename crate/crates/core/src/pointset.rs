//! Point sets and candidate associations between them.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered list of 3D points expressed in a named frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    pub frame_id: String,
    #[serde(with = "vec3_list")]
    pub points: Vec<Vector3<f64>>,
}

impl PointSet {
    pub fn new(frame_id: impl Into<String>, points: Vec<Vector3<f64>>) -> Result<Self> {
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidParameter(
                "point set contains non-finite coordinates".into(),
            ));
        }
        Ok(Self {
            frame_id: frame_id.into(),
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ordered sub-list selected by `indices`, frame preserved.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len());
        for &i in indices {
            let p = self.points.get(i).ok_or(Error::IndexOutOfBounds {
                what: "point set",
                index: i,
                len: self.points.len(),
            })?;
            points.push(*p);
        }
        Ok(Self {
            frame_id: self.frame_id.clone(),
            points,
        })
    }
}

/// Serialize points as `[[x, y, z], ...]`, the scene interchange format.
mod vec3_list {
    use nalgebra::Vector3;
    use serde::de::Deserializer;
    use serde::ser::{SerializeSeq, Serializer};
    use serde::Deserialize;

    pub fn serialize<S: Serializer>(
        points: &[Vector3<f64>],
        ser: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(points.len()))?;
        for p in points {
            seq.serialize_element(&[p.x, p.y, p.z])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<Vec<Vector3<f64>>, D::Error> {
        let raw: Vec<[f64; 3]> = Vec::deserialize(de)?;
        Ok(raw
            .into_iter()
            .map(|[x, y, z]| Vector3::new(x, y, z))
            .collect())
    }
}

/// A candidate pairing between a point of the first set and one of the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Association {
    pub s_index: usize,
    pub t_index: usize,
}

impl Association {
    pub fn new(s_index: usize, t_index: usize) -> Self {
        Self { s_index, t_index }
    }
}

/// All `|S| * |T|` candidate associations in s-major, then t, order.
///
/// The ordering is deterministic so candidate indices are reproducible
/// across runs.
pub fn all_pairs_candidates(s: &PointSet, t: &PointSet) -> Vec<Association> {
    let mut out = Vec::with_capacity(s.len() * t.len());
    for si in 0..s.len() {
        for ti in 0..t.len() {
            out.push(Association::new(si, ti));
        }
    }
    out
}

/// Geometric-consistency violation between two candidate associations:
/// the absolute difference of the intra-set pair distances.
pub fn consistency_distance(a_i: Association, a_j: Association, s: &PointSet, t: &PointSet) -> f64 {
    let ds = (s.points[a_i.s_index] - s.points[a_j.s_index]).norm();
    let dt = (t.points[a_i.t_index] - t.points[a_j.t_index]).norm();
    (ds - dt).abs()
}
