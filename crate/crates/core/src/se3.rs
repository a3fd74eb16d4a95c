//! Rigid-body poses, parallel-jaw grasps, and the grasp-set distance metric.
//!
//! Quaternions are scalar-first `(w, x, y, z)` everywhere in the public API
//! and in serialized form. Poses serialize as 7 numbers
//! `[px, py, pz, qw, qx, qy, qz]`, grasps as 9 numbers appending
//! `[width, score]`.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

use crate::cloud::PointCloud;

/// Tolerance accepted on quaternion inputs before they are rejected.
pub const UNIT_QUAT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum Se3Error {
    #[error("quaternion norm {0} deviates from 1 beyond tolerance")]
    NonUnitQuaternion(f64),
    #[error("grasp set is empty")]
    EmptyGraspSet,
    #[error("euler angle {angle} out of [-pi/2, pi/2]: {value}")]
    EulerOutOfRange { angle: &'static str, value: f64 },
    #[error("grasp width must be positive, got {0}")]
    InvalidWidth(f64),
    #[error("expected grasps in frame {expected:?}, got {got:?}")]
    FrameMismatch { expected: Frame, got: Frame },
}

/// Coordinate frame a grasp set is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Camera,
    Region,
    EndEffector,
    World,
}

/// Rigid transform: position in meters plus a unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 7]", try_from = "[f64; 7]")]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_translation(t: Vector3<f64>) -> Self {
        Self::new(t, UnitQuaternion::identity())
    }

    /// Build from scalar-first quaternion components, renormalizing.
    pub fn from_parts(position: Vector3<f64>, w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::new(
            position,
            UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
        )
    }

    /// Standard SE(3) composition: `self` applied after `other` is
    /// `self.compose(&other)`, i.e. the transform mapping a point `p` to
    /// `self * (other * p)`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.position + self.orientation * other.position,
            orientation: self.orientation * other.orientation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: -(inv * self.position),
            orientation: inv,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * p + self.position
    }

    /// Rotate a direction without translating it.
    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * v
    }

    /// Serialized layout `[px, py, pz, qw, qx, qy, qz]`.
    pub fn to_array(&self) -> [f64; 7] {
        let q = self.orientation.quaternion();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }

    pub fn from_array(a: &[f64; 7]) -> Self {
        Self::from_parts(Vector3::new(a[0], a[1], a[2]), a[3], a[4], a[5], a[6])
    }
}

impl From<Pose> for [f64; 7] {
    fn from(p: Pose) -> Self {
        p.to_array()
    }
}

impl TryFrom<[f64; 7]> for Pose {
    type Error = String;
    fn try_from(a: [f64; 7]) -> Result<Self, Self::Error> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err("non-finite pose component".into());
        }
        Ok(Pose::from_array(&a))
    }
}

/// Parallel-jaw grasp: pose, opening width (m) and a detector score in [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 9]", try_from = "[f64; 9]")]
pub struct Grasp {
    pub pose: Pose,
    pub width: f64,
    pub score: f64,
}

impl Grasp {
    pub fn new(pose: Pose, width: f64, score: f64) -> Result<Self, Se3Error> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Se3Error::InvalidWidth(width));
        }
        Ok(Self {
            pose,
            width,
            score: score.clamp(0.0, 1.0),
        })
    }

    /// Construct from grasp Euler angles, each restricted to [-pi/2, pi/2].
    ///
    /// The angles `(theta, gamma, beta)` are applied intrinsically about
    /// Z, then Y, then X of the grasp frame, so the rotation matrix is
    /// `Rz(theta) * Ry(gamma) * Rx(beta)`. This is the single place the
    /// Euler convention is decided.
    pub fn from_euler(
        center: Vector3<f64>,
        theta: f64,
        gamma: f64,
        beta: f64,
        width: f64,
        score: f64,
    ) -> Result<Self, Se3Error> {
        for (name, v) in [("theta", theta), ("gamma", gamma), ("beta", beta)] {
            if !(-FRAC_PI_2..=FRAC_PI_2).contains(&v) {
                return Err(Se3Error::EulerOutOfRange {
                    angle: name,
                    value: v,
                });
            }
        }
        // nalgebra's (roll, pitch, yaw) builds Rz(yaw) * Ry(pitch) * Rx(roll).
        let orientation = UnitQuaternion::from_euler_angles(beta, gamma, theta);
        Grasp::new(Pose::new(center, orientation), width, score)
    }

    /// Serialized layout `[px, py, pz, qw, qx, qy, qz, width, score]`.
    pub fn to_array(&self) -> [f64; 9] {
        let p = self.pose.to_array();
        [p[0], p[1], p[2], p[3], p[4], p[5], p[6], self.width, self.score]
    }

    pub fn from_array(a: &[f64; 9]) -> Result<Self, Se3Error> {
        Grasp::new(
            Pose::from_array(&[a[0], a[1], a[2], a[3], a[4], a[5], a[6]]),
            a[7],
            a[8],
        )
    }
}

impl From<Grasp> for [f64; 9] {
    fn from(g: Grasp) -> Self {
        g.to_array()
    }
}

impl TryFrom<[f64; 9]> for Grasp {
    type Error = String;
    fn try_from(a: [f64; 9]) -> Result<Self, Self::Error> {
        Grasp::from_array(&a).map_err(|e| e.to_string())
    }
}

/// Ordered set of grasps sharing one coordinate frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspSet {
    pub grasps: Vec<Grasp>,
    pub frame: Frame,
}

impl GraspSet {
    pub fn new(grasps: Vec<Grasp>, frame: Frame) -> Self {
        Self { grasps, frame }
    }

    pub fn empty(frame: Frame) -> Self {
        Self {
            grasps: Vec::new(),
            frame,
        }
    }

    pub fn len(&self) -> usize {
        self.grasps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grasps.is_empty()
    }

    pub fn expect_frame(&self, expected: Frame) -> Result<(), Se3Error> {
        if self.frame != expected {
            return Err(Se3Error::FrameMismatch {
                expected,
                got: self.frame,
            });
        }
        Ok(())
    }

    /// Re-express every grasp under a left-composed transform, retagging.
    pub fn transformed(&self, t: &Pose, frame: Frame) -> GraspSet {
        GraspSet {
            grasps: self
                .grasps
                .iter()
                .map(|g| Grasp {
                    pose: t.compose(&g.pose),
                    width: g.width,
                    score: g.score,
                })
                .collect(),
            frame,
        }
    }
}

fn check_unit(q: &UnitQuaternion<f64>) -> Result<(), Se3Error> {
    // UnitQuaternion normalizes on construction; this guards values built
    // through serde or raw casts.
    let n = q.quaternion().norm();
    if (n - 1.0).abs() > UNIT_QUAT_TOL {
        return Err(Se3Error::NonUnitQuaternion(n));
    }
    Ok(())
}

/// Rotational distance `1 - |q1 . q2|`, in [0, 1].
///
/// Symmetric and invariant under negating either argument, so the
/// quaternion double cover maps to a single distance.
pub fn quat_rotational_distance(
    q1: &UnitQuaternion<f64>,
    q2: &UnitQuaternion<f64>,
) -> Result<f64, Se3Error> {
    check_unit(q1)?;
    check_unit(q2)?;
    Ok(rotational_distance_unchecked(q1, q2))
}

pub(crate) fn rotational_distance_unchecked(
    q1: &UnitQuaternion<f64>,
    q2: &UnitQuaternion<f64>,
) -> f64 {
    let d = q1.coords.dot(&q2.coords);
    (1.0 - d.abs()).clamp(0.0, 1.0)
}

/// Distance from an end-effector pose to a grasp set: the minimum over
/// grasps of squared position distance plus rotational distance.
///
/// The position term is squared by construction. Returns the minimizing
/// index as well; ties break to the lowest index.
pub fn grasp_set_distance(set: &GraspSet, g_ee: &Pose) -> Result<(f64, usize), Se3Error> {
    if set.is_empty() {
        return Err(Se3Error::EmptyGraspSet);
    }
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for (j, g) in set.grasps.iter().enumerate() {
        let dp = g_ee.position - g.pose.position;
        let d = dp.norm_squared()
            + rotational_distance_unchecked(&g.pose.orientation, &g_ee.orientation);
        if d < best {
            best = d;
            best_idx = j;
        }
    }
    Ok((best, best_idx))
}

/// Per-grasp unsquared position distances and rotational distances, used by
/// the command-switching threshold test.
pub fn grasp_component_distances(set: &GraspSet, g_ee: &Pose) -> Vec<(f64, f64)> {
    set.grasps
        .iter()
        .map(|g| {
            let dt = (g_ee.position - g.pose.position).norm();
            let dr = rotational_distance_unchecked(&g.pose.orientation, &g_ee.orientation);
            (dt, dr)
        })
        .collect()
}

/// Apply a rigid transform to every point of a cloud.
pub fn transform_points(t: &Pose, cloud: &PointCloud) -> PointCloud {
    PointCloud::new(cloud.points.iter().map(|p| t.transform_point(p)).collect())
}
