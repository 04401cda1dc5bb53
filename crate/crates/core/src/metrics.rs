//! Trajectory similarity kernels: RMSE, Hausdorff and discrete Fréchet
//! distance over 2D pixel keypoints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("trajectory has no points")]
    EmptyTrajectory,
    #[error("trajectory contains a non-finite coordinate")]
    NonFinite,
    #[error("image dimensions must be positive")]
    NonPositiveImage,
    #[error("expected {expected} trajectories, got {actual}")]
    AgentCountMismatch { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// A temporally ordered, non-empty sequence of finite pixel coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Trajectory(Vec<Point>);

impl Trajectory {
    pub fn new(points: Vec<Point>) -> Result<Self, MetricError> {
        if points.is_empty() {
            return Err(MetricError::EmptyTrajectory);
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        Ok(Trajectory(points))
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, MetricError> {
        Self::new(pairs.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Trajectory {
        Trajectory(self.0.iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect())
    }

    /// Index-uniform linear resampling to `n` points. The first and last
    /// points are preserved.
    pub fn resample(&self, n: usize) -> Vec<Point> {
        let pts = &self.0;
        if n == 0 {
            return Vec::new();
        }
        if pts.len() == 1 || n == 1 {
            return vec![pts[0]; n];
        }
        let scale = (pts.len() - 1) as f64 / (n - 1) as f64;
        (0..n)
            .map(|i| {
                let s = i as f64 * scale;
                let lo = (s.floor() as usize).min(pts.len() - 1);
                let hi = (lo + 1).min(pts.len() - 1);
                pts[lo].lerp(pts[hi], s - lo as f64)
            })
            .collect()
    }
}

impl<'de> Deserialize<'de> for Trajectory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let points = Vec::<Point>::deserialize(d)?;
        Trajectory::new(points).map_err(serde::de::Error::custom)
    }
}

/// Per-agent trajectories (index 0 is the ego agent) in one image frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySet {
    pub trajectories: Vec<Trajectory>,
    pub image_width: u32,
    pub image_height: u32,
}

impl TrajectorySet {
    pub fn new(trajectories: Vec<Trajectory>, image_width: u32, image_height: u32) -> Result<Self, MetricError> {
        if trajectories.is_empty() {
            return Err(MetricError::EmptyTrajectory);
        }
        if image_width == 0 || image_height == 0 {
            return Err(MetricError::NonPositiveImage);
        }
        Ok(TrajectorySet { trajectories, image_width, image_height })
    }

    pub fn diagonal(&self) -> f64 {
        f64::from(self.image_width).hypot(f64::from(self.image_height))
    }
}

/// Root mean square pointwise distance. A prediction whose length differs
/// from the ground truth is first resampled to the ground-truth length.
pub fn rmse(pred: &Trajectory, gt: &Trajectory) -> f64 {
    let resampled;
    let pred_pts = if pred.len() == gt.len() {
        pred.points()
    } else {
        resampled = pred.resample(gt.len());
        &resampled
    };
    let sum: f64 = pred_pts
        .iter()
        .zip(gt.points())
        .map(|(p, g)| {
            let d = p.dist(*g);
            d * d
        })
        .sum();
    (sum / gt.len() as f64).sqrt()
}

fn directed_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the two point sets.
pub fn hausdorff(a: &Trajectory, b: &Trajectory) -> f64 {
    directed_hausdorff(a.points(), b.points()).max(directed_hausdorff(b.points(), a.points()))
}

/// Discrete Fréchet distance (Eiter & Mannila), computed row by row.
pub fn discrete_frechet(a: &Trajectory, b: &Trajectory) -> f64 {
    let (a, b) = (a.points(), b.points());
    let mut prev = vec![0.0f64; b.len()];
    let mut cur = vec![0.0f64; b.len()];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let d = p.dist(*q);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len() - 1]
}

/// Maps a pixel distance into [0, 1] by the image diagonal, clamping at 1.
pub fn normalize_distance(d: f64, image_width: u32, image_height: u32) -> Result<f64, MetricError> {
    if image_width == 0 || image_height == 0 {
        return Err(MetricError::NonPositiveImage);
    }
    let diag = f64::from(image_width).hypot(f64::from(image_height));
    Ok((d.max(0.0) / diag).min(1.0))
}

/// Raw pixel distances for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Distances {
    pub rmse: f64,
    pub hausdorff: f64,
    pub frechet: f64,
}

impl Distances {
    pub fn between(pred: &Trajectory, gt: &Trajectory) -> Self {
        Distances {
            rmse: rmse(pred, gt),
            hausdorff: hausdorff(pred, gt),
            frechet: discrete_frechet(pred, gt),
        }
    }

    pub fn mean(&self) -> f64 {
        (self.rmse + self.hausdorff + self.frechet) / 3.0
    }
}
