//! Learnable grasp representations: Gaussian point templates, fixed gripper
//! keypoints, and 9D translation+rotation features.

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::se3::{Frame, GraspSet, Se3Error};

/// Distance from palm center to the fingertip plane of the keypoint model.
pub const KEYPOINT_FINGER_DEPTH: f64 = 0.06;

#[derive(Debug, Error, PartialEq)]
pub enum RepError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("grasp set is empty")]
    EmptySet,
    #[error(transparent)]
    Frame(#[from] Se3Error),
}

/// A point template drawn once per episode and shared by every grasp in it,
/// so grasp groups are rigid transforms of one another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianTemplate {
    pub points: Vec<Vector3<f64>>,
    pub sigma: f64,
    pub episode: u64,
}

impl GaussianTemplate {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sample `l` points i.i.d. from an isotropic Gaussian with
/// `sigma = nominal_width / 6`.
pub fn sample_gaussian_template<R: Rng>(
    l: usize,
    nominal_width: f64,
    episode: u64,
    rng: &mut R,
) -> Result<GaussianTemplate, RepError> {
    if l == 0 {
        return Err(RepError::NonPositive("point count"));
    }
    if !(nominal_width > 0.0) {
        return Err(RepError::NonPositive("nominal width"));
    }
    let sigma = nominal_width / 6.0;
    let dist = Normal::new(0.0, sigma).expect("sigma > 0");
    let points = (0..l)
        .map(|_| {
            Vector3::new(
                dist.sample(rng),
                dist.sample(rng),
                dist.sample(rng),
            )
        })
        .collect();
    Ok(GaussianTemplate {
        points,
        sigma,
        episode,
    })
}

/// Grasps rendered as point groups: N grasps x L points x 3.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspPointSet {
    pub groups: Vec<Vec<Vector3<f64>>>,
}

impl GraspPointSet {
    pub fn n_grasps(&self) -> usize {
        self.groups.len()
    }

    pub fn points_per_grasp(&self) -> usize {
        self.groups.first().map_or(0, Vec::len)
    }
}

/// Rigidly place the shared template at every grasp pose.
pub fn grasps_to_points(
    set: &GraspSet,
    tmpl: &GaussianTemplate,
) -> Result<GraspPointSet, RepError> {
    set.expect_frame(Frame::EndEffector)?;
    if set.is_empty() {
        return Err(RepError::EmptySet);
    }
    let groups = set
        .grasps
        .iter()
        .map(|g| {
            tmpl.points
                .iter()
                .map(|p| g.pose.transform_point(p))
                .collect()
        })
        .collect();
    Ok(GraspPointSet { groups })
}

/// Variant that scales the template by each grasp's own width relative to
/// the nominal width before transforming. Breaks the shared-rigid-template
/// property; kept as an option only.
pub fn grasps_to_points_width_scaled(
    set: &GraspSet,
    tmpl: &GaussianTemplate,
    nominal_width: f64,
) -> Result<GraspPointSet, RepError> {
    set.expect_frame(Frame::EndEffector)?;
    if set.is_empty() {
        return Err(RepError::EmptySet);
    }
    if !(nominal_width > 0.0) {
        return Err(RepError::NonPositive("nominal width"));
    }
    let groups = set
        .grasps
        .iter()
        .map(|g| {
            let scale = g.width / nominal_width;
            tmpl.points
                .iter()
                .map(|p| g.pose.transform_point(&(p * scale)))
                .collect()
        })
        .collect();
    Ok(GraspPointSet { groups })
}

/// 3D translation plus the first two columns of the rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NineDFeature {
    pub values: [f64; 9],
}

pub fn grasps_to_9d(set: &GraspSet) -> Result<Vec<NineDFeature>, RepError> {
    if set.is_empty() {
        return Err(RepError::EmptySet);
    }
    Ok(set
        .grasps
        .iter()
        .map(|g| {
            let r = g.pose.orientation.to_rotation_matrix();
            let m = r.matrix();
            let t = g.pose.position;
            NineDFeature {
                values: [
                    t.x,
                    t.y,
                    t.z,
                    m[(0, 0)],
                    m[(1, 0)],
                    m[(2, 0)],
                    m[(0, 1)],
                    m[(1, 1)],
                    m[(2, 1)],
                ],
            }
        })
        .collect())
}

/// Reconstruct the full rotation from a 6D pair via Gram-Schmidt.
pub fn rotation_from_6d(v: &[f64; 6]) -> Rotation3<f64> {
    let a = Vector3::new(v[0], v[1], v[2]);
    let b = Vector3::new(v[3], v[4], v[5]);
    let x = a.normalize();
    let y = (b - x * x.dot(&b)).normalize();
    let z = x.cross(&y);
    Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[x, y, z]))
}

/// Four gripper-model keypoints per grasp: wrist, palm center, left and
/// right fingertip. Fingertip separation equals the grasp width.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSet {
    pub keypoints: Vec<[Vector3<f64>; 4]>,
}

pub fn grasps_to_keypoints(set: &GraspSet) -> Result<KeypointSet, RepError> {
    if set.is_empty() {
        return Err(RepError::EmptySet);
    }
    let keypoints = set
        .grasps
        .iter()
        .map(|g| {
            let half = g.width / 2.0;
            // closing axis is grasp-frame x, approach is +z
            let template = [
                Vector3::new(0.0, 0.0, -KEYPOINT_FINGER_DEPTH),
                Vector3::zeros(),
                Vector3::new(-half, 0.0, KEYPOINT_FINGER_DEPTH),
                Vector3::new(half, 0.0, KEYPOINT_FINGER_DEPTH),
            ];
            template.map(|p| g.pose.transform_point(&p))
        })
        .collect();
    Ok(KeypointSet { keypoints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::{Grasp, Pose};
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ee_set(grasps: Vec<Grasp>) -> GraspSet {
        GraspSet::new(grasps, Frame::EndEffector)
    }

    fn random_grasp(rng: &mut ChaCha8Rng) -> Grasp {
        use rand::Rng;
        let axis = Vector3::new(
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        )
        .normalize();
        let q = UnitQuaternion::from_scaled_axis(axis * rng.gen::<f64>() * 3.0);
        let t = Vector3::new(rng.gen(), rng.gen(), rng.gen());
        Grasp::new(Pose::new(t, q), 0.02 + rng.gen::<f64>() * 0.06, 1.0).unwrap()
    }

    #[test]
    fn template_sigma_and_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tmpl = sample_gaussian_template(16, 0.06, 0, &mut rng).unwrap();
        assert_relative_eq!(tmpl.sigma, 0.01, epsilon = 1e-15);
        assert_eq!(tmpl.len(), 16);
        assert!(sample_gaussian_template(0, 0.06, 0, &mut rng).is_err());
        assert!(sample_gaussian_template(16, 0.0, 0, &mut rng).is_err());
    }

    #[test]
    fn template_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let l = 1000;
        let tmpl = sample_gaussian_template(l, 0.06, 0, &mut rng).unwrap();
        let sigma = tmpl.sigma;
        for axis in 0..3 {
            let vals: Vec<f64> = tmpl.points.iter().map(|p| p[axis]).collect();
            let mean = vals.iter().sum::<f64>() / l as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / l as f64;
            assert!(mean.abs() < 4.0 * sigma / (l as f64).sqrt());
            assert!(var.sqrt() > 0.5 * sigma && var.sqrt() < 1.5 * sigma);
        }
    }

    #[test]
    fn template_is_deterministic_under_seed() {
        let a = sample_gaussian_template(8, 0.08, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_gaussian_template(8, 0.08, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grasp_points_identity_and_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tmpl = sample_gaussian_template(8, 0.06, 0, &mut rng).unwrap();

        let ident = ee_set(vec![Grasp::new(Pose::identity(), 0.05, 1.0).unwrap()]);
        let pg = grasps_to_points(&ident, &tmpl).unwrap();
        assert_eq!(pg.groups[0], tmpl.points);

        let t = Vector3::new(0.2, -0.1, 0.3);
        let shifted = ee_set(vec![
            Grasp::new(Pose::from_translation(t), 0.05, 1.0).unwrap()
        ]);
        let pg = grasps_to_points(&shifted, &tmpl).unwrap();
        for (a, b) in pg.groups[0].iter().zip(&tmpl.points) {
            assert_relative_eq!((a - b - t).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grasp_points_matches_matrix_oracle_and_frame_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let tmpl = sample_gaussian_template(8, 0.06, 0, &mut rng).unwrap();
        let g = random_grasp(&mut rng);
        let pg = grasps_to_points(&ee_set(vec![g]), &tmpl).unwrap();
        let r = g.pose.orientation.to_rotation_matrix();
        for (out, p) in pg.groups[0].iter().zip(&tmpl.points) {
            let expect = r * p + g.pose.position;
            assert!((out - expect).norm() < 1e-12);
        }

        let world = GraspSet::new(vec![g], Frame::World);
        assert!(matches!(
            grasps_to_points(&world, &tmpl),
            Err(RepError::Frame(_))
        ));
        assert_eq!(
            grasps_to_points(&ee_set(vec![]), &tmpl),
            Err(RepError::EmptySet)
        );
    }

    #[test]
    fn grasp_points_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tmpl = sample_gaussian_template(12, 0.06, 0, &mut rng).unwrap();
        let grasps: Vec<Grasp> = (0..4).map(|_| random_grasp(&mut rng)).collect();
        let set = ee_set(grasps);
        let t = Pose::new(
            Vector3::new(0.3, 0.1, -0.2),
            UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.8),
        );
        let moved = set.transformed(&t, Frame::EndEffector);
        let direct = grasps_to_points(&moved, &tmpl).unwrap();
        let indirect = grasps_to_points(&set, &tmpl).unwrap();
        for (dg, ig) in direct.groups.iter().zip(&indirect.groups) {
            for (d, i) in dg.iter().zip(ig) {
                assert!((d - t.transform_point(i)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn grasp_points_reuse_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let tmpl = sample_gaussian_template(16, 0.08, 5, &mut rng).unwrap();
        let set = ee_set((0..3).map(|_| random_grasp(&mut rng)).collect());
        let a = grasps_to_points(&set, &tmpl).unwrap();
        let b = grasps_to_points(&set, &tmpl).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nine_d_identity_and_rotation() {
        let ident = ee_set(vec![Grasp::new(Pose::identity(), 0.05, 1.0).unwrap()]);
        let f = grasps_to_9d(&ident).unwrap();
        assert_eq!(f[0].values, [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

        let rot = ee_set(vec![Grasp::new(
            Pose::new(
                Vector3::zeros(),
                UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2),
            ),
            0.05,
            1.0,
        )
        .unwrap()]);
        let f = grasps_to_9d(&rot).unwrap();
        let expect = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0];
        for (a, b) in f[0].values.iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn nine_d_round_trip_recovers_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let g = random_grasp(&mut rng);
            let f = grasps_to_9d(&ee_set(vec![g])).unwrap();
            let v = &f[0].values;
            let rot = rotation_from_6d(&[v[3], v[4], v[5], v[6], v[7], v[8]]);
            let orig = g.pose.orientation.to_rotation_matrix();
            assert!((rot.matrix() - orig.matrix()).abs().max() < 1e-9);
        }
    }

    #[test]
    fn keypoints_geometry() {
        let g = Grasp::new(Pose::identity(), 0.08, 1.0).unwrap();
        let kp = grasps_to_keypoints(&ee_set(vec![g])).unwrap();
        let [wrist, palm, left, right] = kp.keypoints[0];
        assert_eq!(palm, Vector3::zeros());
        assert_eq!(wrist, Vector3::new(0.0, 0.0, -KEYPOINT_FINGER_DEPTH));
        assert_eq!(left, Vector3::new(-0.04, 0.0, KEYPOINT_FINGER_DEPTH));
        assert_eq!(right, Vector3::new(0.04, 0.0, KEYPOINT_FINGER_DEPTH));
    }

    #[test]
    fn keypoints_follow_pose_and_keep_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let g = random_grasp(&mut rng);
            let kp = grasps_to_keypoints(&ee_set(vec![g])).unwrap();
            let [_, _, left, right] = kp.keypoints[0];
            assert_relative_eq!((left - right).norm(), g.width, epsilon = 1e-12);
            // translation equivariance against the matrix oracle
            let r = g.pose.orientation.to_rotation_matrix();
            let expect = r * Vector3::new(0.0, 0.0, -KEYPOINT_FINGER_DEPTH) + g.pose.position;
            assert!((kp.keypoints[0][0] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn width_scaled_variant_scales_template() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tmpl = sample_gaussian_template(4, 0.08, 0, &mut rng).unwrap();
        let g = Grasp::new(Pose::identity(), 0.04, 1.0).unwrap();
        let pg = grasps_to_points_width_scaled(&ee_set(vec![g]), &tmpl, 0.08).unwrap();
        for (out, p) in pg.groups[0].iter().zip(&tmpl.points) {
            assert!((out - p * 0.5).norm() < 1e-15);
        }
    }
}
