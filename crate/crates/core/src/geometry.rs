//! Rigid-body poses, cuboids, and articulation joints.
//!
//! World frame: z up, gravity -z. Objects rest at the origin with the
//! openable face normal pointing +x; the robot operates in x > 0.

use nalgebra::{Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    /// Handle sits on the joint axis; the lever direction is undefined.
    #[error("handle center is {distance:.3e} m from the joint axis; lever direction undefined")]
    HandleOnAxis { distance: f64 },
    /// Cuboid half extents must be strictly positive.
    #[error("non-positive half extent {value} on axis {axis}")]
    BadHalfExtent { axis: usize, value: f64 },
}

/// Rigid transform: rotation then translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    pub fn identity() -> Self {
        Self { position: Vector3::zeros(), orientation: UnitQuaternion::identity() }
    }

    /// Planar pose on the ground: position (x, y, 0), yaw about +z.
    pub fn from_xy_yaw(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            position: Vector3::new(x, y, 0.0),
            orientation: UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        }
    }

    pub fn yaw(&self) -> f64 {
        self.orientation.euler_angles().2
    }

    /// Local point to world.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * p + self.position
    }

    /// World point to local.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * (p - self.position)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * v
    }

    pub fn inverse_transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * v
    }

    /// `self` then `child`: the pose of `child` expressed through `self`.
    pub fn compose(&self, child: &Pose) -> Pose {
        let mut orientation = self.orientation * child.orientation;
        orientation.renormalize();
        Pose { position: self.transform_point(&child.position), orientation }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose { position: -(inv * self.position), orientation: inv }
    }
}

/// Oriented box; `half_extents` are strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuboid {
    pub pose: Pose,
    pub half_extents: Vector3<f64>,
}

impl Cuboid {
    pub fn new(pose: Pose, half_extents: Vector3<f64>) -> Result<Self, GeometryError> {
        for axis in 0..3 {
            if !(half_extents[axis] > 0.0) {
                return Err(GeometryError::BadHalfExtent { axis, value: half_extents[axis] });
            }
        }
        Ok(Self { pose, half_extents })
    }

    /// The 8 corners in world frame, fixed order: index bit 0 = +x side,
    /// bit 1 = +y side, bit 2 = +z side (local signs).
    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let h = self.half_extents;
        let mut out = [Vector3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let local = Vector3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            );
            *c = self.pose.transform_point(&local);
        }
        out
    }

    /// Closest point on or inside the box to a world point.
    pub fn closest_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let local = self.pose.inverse_transform_point(p);
        let clamped = Vector3::new(
            local.x.clamp(-self.half_extents.x, self.half_extents.x),
            local.y.clamp(-self.half_extents.y, self.half_extents.y),
            local.z.clamp(-self.half_extents.z, self.half_extents.z),
        );
        self.pose.transform_point(&clamped)
    }

    /// Distance from a world point to the box surface; 0 inside.
    pub fn distance_to_point(&self, p: &Vector3<f64>) -> f64 {
        (p - self.closest_point(p)).norm()
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let local = self.pose.inverse_transform_point(p);
        local.x.abs() <= self.half_extents.x
            && local.y.abs() <= self.half_extents.y
            && local.z.abs() <= self.half_extents.z
    }

    /// Local axis with the largest half extent; ties break toward lower index.
    pub fn long_axis_index(&self) -> usize {
        let h = self.half_extents;
        let mut best = 0;
        for i in 1..3 {
            if h[i] > h[best] {
                best = i;
            }
        }
        best
    }

    /// World direction of the given local axis.
    pub fn world_axis(&self, index: usize) -> Unit<Vector3<f64>> {
        let mut local = Vector3::zeros();
        local[index] = 1.0;
        Unit::new_normalize(self.pose.transform_vector(&local))
    }

    /// Local axis best suited for sorting points "sideways": maximizes
    /// extent along the axis weighted by how horizontal the axis lies in
    /// world. Ties break toward lower index.
    pub fn lateral_axis_index(&self) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..3 {
            let dir = self.world_axis(i);
            let horizontal = (dir.x * dir.x + dir.y * dir.y).sqrt();
            let score = self.half_extents[i] * horizontal;
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }
}

/// Articulation type of the openable part. Revolute variants name the
/// hinge edge as seen from the front (+x side) of the object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    RevoluteLeft,
    RevoluteRight,
    RevoluteUp,
    RevoluteDown,
    Prismatic,
}

impl JointKind {
    pub fn is_revolute(self) -> bool {
        !matches!(self, JointKind::Prismatic)
    }

    pub const ALL: [JointKind; 5] = [
        JointKind::RevoluteLeft,
        JointKind::RevoluteRight,
        JointKind::RevoluteUp,
        JointKind::RevoluteDown,
        JointKind::Prismatic,
    ];
}

/// Joint in world frame. `axis_dir` is oriented so that positive
/// articulation moves the panel toward +x (out of the object).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub kind: JointKind,
    pub axis_point: Vector3<f64>,
    pub axis_dir: Unit<Vector3<f64>>,
    /// Articulation range is [0, limit]; radians for revolute, meters for prismatic.
    pub limit: f64,
}

impl JointSpec {
    /// Pose displacement of the panel at articulation value `xi`.
    pub fn displacement(&self, xi: f64) -> Pose {
        if self.kind.is_revolute() {
            let rot = UnitQuaternion::from_axis_angle(&self.axis_dir, xi);
            // Rotation about a line through axis_point: p' = R (p - a) + a.
            Pose { position: self.axis_point - rot * self.axis_point, orientation: rot }
        } else {
            Pose { position: self.axis_dir.into_inner() * xi, orientation: UnitQuaternion::identity() }
        }
    }

    /// Foot of the perpendicular from `p` onto the joint axis line.
    pub fn perpendicular_foot(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let d = p - self.axis_point;
        self.axis_point + self.axis_dir.into_inner() * d.dot(&self.axis_dir)
    }
}

/// World-frame articulation cue at a handle position.
///
/// Revolute: the lever arm from the handle to the joint axis (its norm is
/// the lever radius). Prismatic: unit gravity direction, a fixed tag that
/// carries no axis geometry.
pub fn ground_truth_articulation(
    joint: &JointSpec,
    handle_center: &Vector3<f64>,
) -> Result<Vector3<f64>, GeometryError> {
    if joint.kind.is_revolute() {
        let alpha = joint.perpendicular_foot(handle_center) - handle_center;
        let r = alpha.norm();
        if r < 1e-9 {
            return Err(GeometryError::HandleOnAxis { distance: r });
        }
        Ok(alpha)
    } else {
        Ok(Vector3::new(0.0, 0.0, -1.0))
    }
}

/// Alignment angle in [0, pi/2] between the gripper's finger-span axis
/// (EE local y in world) and the handle's long axis. 0 means the fingers
/// straddle the handle crosswise, the graspable orientation.
pub fn gripper_handle_angle(ee_orientation: &UnitQuaternion<f64>, handle_long_axis: &Unit<Vector3<f64>>) -> f64 {
    let span = ee_orientation * Vector3::y();
    span.dot(handle_long_axis).abs().clamp(0.0, 1.0).acos()
}

/// Wrap to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}
