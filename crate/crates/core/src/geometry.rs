//! Planar rigid-body algebra: points, poses and point clouds.
//!
//! Yaw is counter-clockwise positive, in radians, and always stored wrapped
//! to `(-π, π]`. Degrees only appear at I/O boundaries.

use std::f64::consts::{PI, TAU};
use std::fmt;

use crate::error::{Error, Result};

/// Frame label used for clouds expressed in the sensor frame.
pub const SENSOR_FRAME: &str = "sensor";
/// Frame label used for clouds expressed in the global map frame.
pub const GLOBAL_FRAME: &str = "global";

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// A 2D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    #[inline]
    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(&self, other: &Point2) -> f64 {
        self.distance_squared(other).sqrt()
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Planar rigid transform `(x, y, yaw)`.
///
/// Also used as a robot pose: the transform taking robot-frame coordinates
/// into the global frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    x: f64,
    y: f64,
    yaw: f64,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2 {
    /// Creates a pose, wrapping `yaw` into `(-π, π]`.
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            yaw: wrap_angle(yaw),
        }
    }

    pub const fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
        }
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    #[inline]
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    #[inline]
    pub fn translation(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.yaw.is_finite()
    }

    /// SE(2) product `self ∘ other`: `other` expressed in the frame of `self`.
    ///
    /// ```text
    /// c.x   = a.x + b.x·cos(a.yaw) − b.y·sin(a.yaw)
    /// c.y   = a.y + b.x·sin(a.yaw) + b.y·cos(a.yaw)
    /// c.yaw = wrap(a.yaw + b.yaw)
    /// ```
    #[inline]
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (s, c) = self.yaw.sin_cos();
        Pose2::new(
            self.x + other.x * c - other.y * s,
            self.y + other.x * s + other.y * c,
            self.yaw + other.yaw,
        )
    }

    #[inline]
    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.yaw.sin_cos();
        Pose2::new(-self.x * c - self.y * s, self.x * s - self.y * c, -self.yaw)
    }

    /// Rotates `p` by yaw, then translates by `(x, y)`.
    #[inline]
    pub fn transform_point(&self, p: &Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        Point2::new(self.x + p.x * c - p.y * s, self.y + p.x * s + p.y * c)
    }

    /// Applies this transform to every point of `cloud`, relabelling the result
    /// as `target_frame`. Point order is preserved.
    pub fn transform_cloud(&self, cloud: &PointCloud2, target_frame: &str) -> PointCloud2 {
        let (s, c) = self.yaw.sin_cos();
        let points = cloud
            .points
            .iter()
            .map(|p| Point2::new(self.x + p.x * c - p.y * s, self.y + p.x * s + p.y * c))
            .collect();
        PointCloud2 {
            points,
            frame: target_frame.to_owned(),
        }
    }
}

impl fmt::Display for Pose2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6} rad)", self.x, self.y, self.yaw)
    }
}

/// Ordered set of 2D points in a named frame. All coordinates are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud2 {
    points: Vec<Point2>,
    frame: String,
}

impl PointCloud2 {
    pub fn new(points: Vec<Point2>, frame: impl Into<String>) -> Result<Self> {
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinitePoint { index });
        }
        Ok(Self {
            points,
            frame: frame.into(),
        })
    }

    pub fn empty(frame: impl Into<String>) -> Self {
        Self {
            points: Vec::new(),
            frame: frame.into(),
        }
    }

    /// Caller guarantees every point is finite.
    pub(crate) fn from_finite(points: Vec<Point2>, frame: impl Into<String>) -> Self {
        debug_assert!(points.iter().all(Point2::is_finite));
        Self {
            points,
            frame: frame.into(),
        }
    }

    #[inline]
    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    #[inline]
    pub fn frame(&self) -> &str {
        &self.frame
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Free-function form of [`Pose2::transform_cloud`].
pub fn transform_cloud(pose: &Pose2, cloud: &PointCloud2, target_frame: &str) -> PointCloud2 {
    pose.transform_cloud(cloud, target_frame)
}
