//! Point-cloud primitives and the graspable-region explorer.
//!
//! Everything here is a brute-force scan; at the cloud sizes this pipeline
//! sees (|P| <= 8192, M = 512) acceleration structures are not worth it.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CloudError {
    #[error("operation requires a nonempty point cloud")]
    EmptyCloud,
    #[error("workspace box must satisfy min < max componentwise")]
    BadWorkspace,
    #[error("explorer parameter {0} must be positive")]
    BadParam(&'static str),
    #[error("tracking lost: no points remain after workspace filtering")]
    TrackingLost,
}

/// Raw 3D observation points, meters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        debug_assert!(points.iter().all(|p| p.iter().all(|v| v.is_finite())));
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vector3<f64>>() / self.points.len() as f64)
    }
}

/// Axis-aligned workspace, closed on all faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBox {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl WorkspaceBox {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self, CloudError> {
        if !(min.x < max.x && min.y < max.y && min.z < max.z) {
            return Err(CloudError::BadWorkspace);
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }
}

/// Tracked graspable-region centers, at most `capacity` of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCenters {
    pub centers: Vec<Vector3<f64>>,
    pub capacity: usize,
}

impl RegionCenters {
    pub fn new(centers: Vec<Vector3<f64>>, capacity: usize) -> Self {
        debug_assert!(centers.len() <= capacity);
        Self { centers, capacity }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Explorer tuning knobs. `n_tracked + n_complement` is the center budget K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExplorerParams {
    /// Ball-query radius, meters.
    pub radius: f64,
    /// Points gathered per region (M).
    pub points_per_region: usize,
    /// Centers resampled from the tracked regions (N_o).
    pub n_tracked: usize,
    /// Centers resampled from the whole filtered cloud (N_c).
    pub n_complement: usize,
    /// Centers farther than this from every current point are dropped.
    pub stale_distance: f64,
}

impl Default for ExplorerParams {
    fn default() -> Self {
        Self {
            radius: 0.05,
            points_per_region: 512,
            n_tracked: 48,
            n_complement: 16,
            stale_distance: 0.05,
        }
    }
}

impl ExplorerParams {
    pub fn validate(&self) -> Result<(), CloudError> {
        if !(self.radius > 0.0) {
            return Err(CloudError::BadParam("radius"));
        }
        if self.points_per_region == 0 {
            return Err(CloudError::BadParam("points_per_region"));
        }
        if self.n_tracked == 0 {
            return Err(CloudError::BadParam("n_tracked"));
        }
        if self.n_complement == 0 {
            return Err(CloudError::BadParam("n_complement"));
        }
        if !(self.stale_distance > 0.0) {
            return Err(CloudError::BadParam("stale_distance"));
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.n_tracked + self.n_complement
    }
}

/// Keep exactly the points inside the closed box.
pub fn workspace_filter(cloud: &PointCloud, ws: &WorkspaceBox) -> PointCloud {
    PointCloud::new(
        cloud
            .points
            .iter()
            .filter(|p| ws.contains(p))
            .copied()
            .collect(),
    )
}

/// Greedy farthest point sampling.
///
/// Starting from `seed_index`, each pick maximizes the distance to the
/// already-chosen set (ties to the lowest index). Returns indices in
/// selection order; asking for `n >= |P|` returns the full greedy ordering,
/// so the result for `n = k` is always a prefix of the result for `n = k+1`.
pub fn farthest_point_sampling(
    cloud: &PointCloud,
    n: usize,
    seed_index: usize,
) -> Result<Vec<usize>, CloudError> {
    if cloud.is_empty() {
        return Err(CloudError::EmptyCloud);
    }
    let len = cloud.len();
    let seed = seed_index.min(len - 1);
    let n = n.min(len);
    let mut chosen = Vec::with_capacity(n);
    let mut min_dist = vec![f64::INFINITY; len];
    let mut last = seed;
    chosen.push(seed);
    while chosen.len() < n {
        let last_p = cloud.points[last];
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0;
        for (i, p) in cloud.points.iter().enumerate() {
            let d = (p - last_p).norm_squared();
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            if min_dist[i] > best {
                best = min_dist[i];
                best_idx = i;
            }
        }
        chosen.push(best_idx);
        last = best_idx;
    }
    Ok(chosen)
}

/// One ball-query region: indices into the queried cloud, padded by
/// repeating the member nearest to the center until `points_per_region`
/// entries exist. A region with no members in range stays empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BallRegion {
    pub indices: Vec<usize>,
    /// Distinct members found before padding.
    pub member_count: usize,
}

impl BallRegion {
    pub fn is_empty(&self) -> bool {
        self.member_count == 0
    }
}

/// Gather up to `m` points within `radius` of each center, scanning in
/// index order.
pub fn ball_query(
    cloud: &PointCloud,
    centers: &RegionCenters,
    radius: f64,
    m: usize,
) -> Vec<BallRegion> {
    let r2 = radius * radius;
    centers
        .centers
        .iter()
        .map(|c| {
            let mut indices = Vec::new();
            let mut nearest = (f64::INFINITY, 0usize);
            for (i, p) in cloud.points.iter().enumerate() {
                let d2 = (p - c).norm_squared();
                if d2 <= r2 {
                    if d2 < nearest.0 {
                        nearest = (d2, indices.len());
                    }
                    indices.push(i);
                    if indices.len() == m {
                        break;
                    }
                }
            }
            let member_count = indices.len();
            if member_count > 0 {
                let pad = indices[nearest.1];
                indices.resize(m, pad);
            }
            BallRegion {
                indices,
                member_count,
            }
        })
        .collect()
}

fn lex_cmp(a: &Vector3<f64>, b: &Vector3<f64>) -> std::cmp::Ordering {
    a.x.partial_cmp(&b.x)
        .unwrap()
        .then(a.y.partial_cmp(&b.y).unwrap())
        .then(a.z.partial_cmp(&b.z).unwrap())
}

/// Canonical FPS over a bag of points: sort lexicographically, dedup exact
/// duplicates, seed at index 0. Point-order invariant by construction.
fn fps_points(mut points: Vec<Vector3<f64>>, n: usize) -> Vec<Vector3<f64>> {
    if points.is_empty() || n == 0 {
        return Vec::new();
    }
    points.sort_by(lex_cmp);
    points.dedup();
    let cloud = PointCloud::new(points);
    let idx = farthest_point_sampling(&cloud, n, 0).expect("nonempty");
    idx.into_iter().map(|i| cloud.points[i]).collect()
}

/// Seed the explorer: FPS of the full center budget over the filtered cloud.
pub fn explorer_init(
    cloud: &PointCloud,
    ws: &WorkspaceBox,
    params: &ExplorerParams,
) -> Result<RegionCenters, CloudError> {
    params.validate()?;
    let filtered = workspace_filter(cloud, ws);
    if filtered.is_empty() {
        return Err(CloudError::TrackingLost);
    }
    let centers = fps_points(filtered.points, params.capacity());
    Ok(RegionCenters::new(centers, params.capacity()))
}

/// Advance the tracked region centers by one frame.
///
/// Crops regions around the previous centers, aggregates and
/// workspace-filters them, resamples `n_tracked` centers from the regional
/// points and `n_complement` from the whole filtered cloud, then drops any
/// center whose nearest current point is farther than `stale_distance`.
pub fn explorer_step(
    prev: &RegionCenters,
    cloud: &PointCloud,
    params: &ExplorerParams,
    ws: &WorkspaceBox,
) -> Result<RegionCenters, CloudError> {
    params.validate()?;
    let filtered = workspace_filter(cloud, ws);
    if filtered.is_empty() {
        return Err(CloudError::TrackingLost);
    }

    // Crop regional points around the previous centers; membership is a set,
    // so overlapping regions do not duplicate work downstream.
    let regions = ball_query(cloud, prev, params.radius, params.points_per_region);
    let mut member = vec![false; cloud.len()];
    for region in &regions {
        for &i in &region.indices[..region.member_count] {
            member[i] = true;
        }
    }
    let regional: Vec<Vector3<f64>> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(i, p)| member[*i] && ws.contains(p))
        .map(|(_, p)| *p)
        .collect();

    let tracked = fps_points(regional, params.n_tracked);
    let complement = fps_points(filtered.points.clone(), params.n_complement);

    let mut centers = tracked;
    centers.extend(complement);

    // Stale-center filter: a center must have a current point within range.
    let d2 = params.stale_distance * params.stale_distance;
    centers.retain(|c| {
        filtered
            .points
            .iter()
            .any(|p| (p - c).norm_squared() <= d2)
    });
    debug_assert!(centers.len() <= params.capacity());
    Ok(RegionCenters::new(centers, params.capacity()))
}
