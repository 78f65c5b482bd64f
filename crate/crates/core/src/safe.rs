//! Low-dimensional shape features from sampled cuboid interiors.
//!
//! A feature is a small, fixed-size set of points drawn uniformly from a
//! cuboid volume, sorted along the cuboid's lateral axis so that the
//! flattened vector is permutation-stable. Points are captured once in
//! world frame and re-expressed in the consumer's frame per use.

use crate::geometry::{Cuboid, Pose};
use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Points per feature; the flattened feature is 3x this wide.
pub const SHAPE_POINTS: usize = 8;

/// Draw `n` points uniformly from the cuboid volume, in world frame.
pub fn sample_cuboid_points<R: Rng>(cuboid: &Cuboid, n: usize, rng: &mut R) -> Vec<Vector3<f64>> {
    let h = cuboid.half_extents;
    (0..n)
        .map(|_| {
            let local = Vector3::new(
                rng.gen_range(-h.x..=h.x),
                rng.gen_range(-h.y..=h.y),
                rng.gen_range(-h.z..=h.z),
            );
            cuboid.pose.transform_point(&local)
        })
        .collect()
}

/// A captured shape feature: world-frame points frozen at capture time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFeature {
    points: Vec<Vector3<f64>>,
}

impl ShapeFeature {
    /// Sample the interior and sort along the capture-time lateral axis.
    pub fn capture<R: Rng>(cuboid: &Cuboid, n: usize, rng: &mut R) -> Self {
        let mut points = sample_cuboid_points(cuboid, n, rng);
        let axis = cuboid.world_axis(cuboid.lateral_axis_index()).into_inner();
        points.sort_unstable_by(|a, b| a.dot(&axis).total_cmp(&b.dot(&axis)));
        Self { points }
    }

    /// The 8 corners verbatim in enumeration order, no sampling, no sort.
    pub fn from_corners(cuboid: &Cuboid) -> Self {
        Self { points: cuboid.corners().to_vec() }
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn feature_dim(&self) -> usize {
        3 * self.points.len()
    }

    /// Flatten into `out` with every point expressed in `base`.
    pub fn express_in(&self, base: &Pose, out: &mut Vec<f64>) {
        for p in &self.points {
            let local = base.inverse_transform_point(p);
            out.push(local.x);
            out.push(local.y);
            out.push(local.z);
        }
    }

    /// Flatten in world frame, recentered on the cuboid position. Used for
    /// pose-free distribution comparisons between feature variants.
    pub fn flatten_centered(&self, center: &Vector3<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.feature_dim());
        for p in &self.points {
            let d = p - center;
            out.push(d.x);
            out.push(d.y);
            out.push(d.z);
        }
        out
    }
}
