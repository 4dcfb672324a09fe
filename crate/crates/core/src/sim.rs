//! Desk-scale synthetic datasets: a closed corridor loop with doorways and
//! pillar clusters, a ground-truth drive around it, and degraded scans.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::eval::Trajectory;
use crate::geometry::{Point2, PointCloud2, Pose2, GLOBAL_FRAME};
use crate::map::PointMap;
use crate::surrogate::{degrade, simulate_scan, DegradeParams};

/// Rounded-rectangle corridor loop.
///
/// The centerline is a rectangle of straight sides `straight_x` by
/// `straight_y` joined by quarter circles of `corner_radius`; its length is
/// `2·(straight_x + straight_y) + 2π·corner_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub straight_x: f64,
    pub straight_y: f64,
    pub corner_radius: f64,
    /// Distance from the centerline to each wall.
    pub corridor_half_width: f64,
    /// Mean spacing of wall points along the wall; individual gaps vary by ±50%.
    pub wall_spacing: f64,
    /// Expected number of doorway gaps per 100 m of wall.
    pub doors_per_100m: f64,
    pub door_width: f64,
    /// Mean spacing of pillar clusters along the centerline.
    pub pillar_spacing: f64,
    pub seed: u64,
}

impl Default for WorldSpec {
    /// A loop of about 200 m.
    fn default() -> Self {
        Self {
            straight_x: 45.0,
            straight_y: 30.0,
            corner_radius: 8.0,
            corridor_half_width: 4.0,
            wall_spacing: 0.05,
            doors_per_100m: 6.0,
            door_width: 3.0,
            pillar_spacing: 3.0,
            seed: 1,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("straight_x", self.straight_x),
            ("straight_y", self.straight_y),
            ("corner_radius", self.corner_radius),
            ("corridor_half_width", self.corridor_half_width),
            ("wall_spacing", self.wall_spacing),
            ("pillar_spacing", self.pillar_spacing),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("world {name} must be > 0, got {v}")));
            }
        }
        if self.corridor_half_width >= self.corner_radius {
            return Err(invalid(
                "corridor_half_width must be smaller than corner_radius",
            ));
        }
        if !(self.doors_per_100m >= 0.0 && self.door_width >= 0.0) {
            return Err(invalid("door parameters must be >= 0"));
        }
        Ok(())
    }

    pub fn loop_length(&self) -> f64 {
        2.0 * (self.straight_x + self.straight_y) + TAU * self.corner_radius
    }

    /// Centerline pose at arc length `s` (wrapped onto the loop). Heading is
    /// the direction of travel; the loop runs counter-clockwise, so the inner
    /// wall is on the left.
    pub fn centerline(&self, s: f64) -> Pose2 {
        let (a, b, r) = (self.straight_x, self.straight_y, self.corner_radius);
        let quarter = FRAC_PI_2 * r;
        let mut s = s.rem_euclid(self.loop_length());
        // (start point, heading) of each straight, followed by the corner
        // turning left around (corner center)
        let sides = [
            (
                Point2::new(-a / 2.0, -b / 2.0 - r),
                0.0,
                a,
                Point2::new(a / 2.0, -b / 2.0),
            ),
            (
                Point2::new(a / 2.0 + r, -b / 2.0),
                FRAC_PI_2,
                b,
                Point2::new(a / 2.0, b / 2.0),
            ),
            (
                Point2::new(a / 2.0, b / 2.0 + r),
                PI,
                a,
                Point2::new(-a / 2.0, b / 2.0),
            ),
            (
                Point2::new(-a / 2.0 - r, b / 2.0),
                -FRAC_PI_2,
                b,
                Point2::new(-a / 2.0, -b / 2.0),
            ),
        ];
        for (start, heading, len, center) in sides {
            if s < len {
                let (sn, cs) = f64::sin_cos(heading);
                return Pose2::new(start.x + s * cs, start.y + s * sn, heading);
            }
            s -= len;
            if s < quarter {
                let phi = s / r;
                // radial angle from corner center starts perpendicular-right of heading
                let radial = heading - FRAC_PI_2 + phi;
                return Pose2::new(
                    center.x + r * radial.cos(),
                    center.y + r * radial.sin(),
                    heading + phi,
                );
            }
            s -= quarter;
        }
        self.centerline(0.0)
    }

    /// Signed curvature of the centerline at `s` (positive turning left).
    fn curvature(&self, s: f64) -> f64 {
        let (a, b, r) = (self.straight_x, self.straight_y, self.corner_radius);
        let quarter = FRAC_PI_2 * r;
        let mut s = s.rem_euclid(self.loop_length());
        for len in [a, b, a, b] {
            if s < len {
                return 0.0;
            }
            s -= len;
            if s < quarter {
                return 1.0 / r;
            }
            s -= quarter;
        }
        0.0
    }

    /// Samples the world: both walls (with doorway gaps) and pillar clusters.
    pub fn build(&self) -> Result<PointCloud2> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let length = self.loop_length();
        let mut points = Vec::new();

        for side in [1.0, -1.0] {
            let offset = side * self.corridor_half_width;
            let n_doors = (self.doors_per_100m * length / 100.0).round() as usize;
            let doors: Vec<f64> = (0..n_doors)
                .map(|_| rng.random_range(0.0..length))
                .collect();
            let mut s = 0.0;
            while s < length {
                let in_door = doors.iter().any(|&d| {
                    let gap = (s - d).rem_euclid(length);
                    gap < self.door_width
                });
                let c = self.centerline(s);
                if !in_door {
                    points.push(lateral(&c, offset));
                }
                let stretch = (1.0 - offset * self.curvature(s)).abs().max(1e-3);
                s += self.wall_spacing * rng.random_range(0.5..1.5) / stretch;
            }
        }

        let mut s = rng.random_range(0.0..self.pillar_spacing);
        while s < length {
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let offset = side * rng.random_range(0.55..0.85) * self.corridor_half_width;
            let center = lateral(&self.centerline(s), offset);
            let radius = rng.random_range(0.2..0.5);
            let n = rng.random_range(5..10);
            for k in 0..n {
                let a = TAU * k as f64 / n as f64;
                points.push(Point2::new(
                    center.x + radius * a.cos(),
                    center.y + radius * a.sin(),
                ));
            }
            s += self.pillar_spacing * rng.random_range(0.5..1.5);
        }
        PointCloud2::new(points, GLOBAL_FRAME)
    }
}

fn lateral(pose: &Pose2, offset: f64) -> Point2 {
    pose.transform_point(&Point2::new(0.0, offset))
}

/// Drive once around the loop in `n_steps` equal steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub n_steps: usize,
    /// Seconds between consecutive scans.
    pub dt: f64,
    /// Number of laps driven over the `n_steps`.
    pub laps: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            n_steps: 500,
            dt: 0.25,
            laps: 1.0,
        }
    }
}

/// Ground-truth poses along the centerline; `None` for zero steps.
pub fn ground_truth(world: &WorldSpec, traj: &TrajectorySpec) -> Result<Option<Trajectory>> {
    if traj.dt.is_nan() || traj.dt <= 0.0 || traj.laps.is_nan() || traj.laps <= 0.0 {
        return Err(invalid("trajectory dt and laps must be > 0"));
    }
    if traj.n_steps == 0 {
        return Ok(None);
    }
    let ds = traj.laps * world.loop_length() / traj.n_steps as f64;
    let samples = (0..traj.n_steps)
        .map(|k| (k as f64 * traj.dt, world.centerline(k as f64 * ds)))
        .collect();
    Trajectory::new(samples).map(Some)
}

/// Sensor geometry of the simulated range sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSpec {
    pub max_range: f64,
    pub angular_step: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        Self {
            max_range: 30.0,
            angular_step: 0.5f64.to_radians(),
        }
    }
}

/// A generated dataset held in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub map: PointCloud2,
    pub ground_truth: Option<Trajectory>,
    pub scans: Vec<PointCloud2>,
}

/// Builds the world, drives the trajectory and produces one degraded scan
/// per ground-truth pose. Scan `k` is degraded with a seed derived from
/// `seed` and `k`.
pub fn generate(
    world: &WorldSpec,
    traj: &TrajectorySpec,
    sensor: &SensorSpec,
    degradation: &DegradeParams,
    seed: u64,
) -> Result<Dataset> {
    degradation.validate()?;
    let cloud = world.build()?;
    let map = PointMap::build(cloud.clone())?;
    let gt = ground_truth(world, traj)?;
    let mut scans = Vec::new();
    if let Some(gt) = &gt {
        let mut seeder = ChaCha8Rng::seed_from_u64(seed);
        for (_, pose) in gt.samples() {
            let ideal = simulate_scan(&map, pose, sensor.max_range, sensor.angular_step)?;
            scans.push(degrade(&ideal, degradation, seeder.random())?);
        }
    }
    Ok(Dataset {
        map: cloud,
        ground_truth: gt,
        scans,
    })
}
