//! Synthetic range scans, radar-style degradation, and nearest-neighbor
//! similarity statistics between a generated scan and a reference scan.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point2, PointCloud2, Pose2, SENSOR_FRAME};
use crate::map::PointMap;
use crate::scan::range_filter;

/// Knobs of the three-part degradation model: dropout, jitter and ghosts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradeParams {
    /// Probability that a true return survives.
    pub keep_prob: f64,
    /// Isotropic Gaussian position noise, meters.
    pub jitter_sigma: f64,
    /// Expected number of ghost returns per scan.
    pub ghost_rate: f64,
    pub max_range: f64,
}

impl DegradeParams {
    /// Parameters under which [`degrade`] leaves in-range scans untouched.
    pub fn identity(max_range: f64) -> Self {
        Self {
            keep_prob: 1.0,
            jitter_sigma: 0.0,
            ghost_rate: 0.0,
            max_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.keep_prob) {
            return Err(invalid(format!(
                "keep_prob must be in [0, 1], got {}",
                self.keep_prob
            )));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(invalid(format!(
                "jitter_sigma must be >= 0, got {}",
                self.jitter_sigma
            )));
        }
        if !(self.ghost_rate >= 0.0 && self.ghost_rate.is_finite()) {
            return Err(invalid(format!(
                "ghost_rate must be >= 0, got {}",
                self.ghost_rate
            )));
        }
        if self.max_range.is_nan() || self.max_range <= 0.0 {
            return Err(invalid(format!(
                "max_range must be > 0, got {}",
                self.max_range
            )));
        }
        Ok(())
    }
}

/// Ideal 2D range scan of `world` from `pose`, in the sensor frame.
///
/// Bearings are `k · angular_step`. Each bearing returns the closest world
/// point whose bearing lies within half a step of it and whose range is at
/// most `max_range`. Returns are ordered by bearing index.
pub fn simulate_scan(
    world: &PointMap,
    pose: &Pose2,
    max_range: f64,
    angular_step: f64,
) -> Result<PointCloud2> {
    if !(angular_step > 0.0 && angular_step.is_finite()) {
        return Err(invalid(format!(
            "angular_step must be > 0, got {angular_step}"
        )));
    }
    if max_range.is_nan() || max_range <= 0.0 {
        return Err(invalid(format!("max_range must be > 0, got {max_range}")));
    }
    let bins = (TAU / angular_step).round().max(1.0) as usize;
    let mut best: Vec<Option<(f64, Point2)>> = vec![None; bins];
    let to_sensor = pose.inverse();
    for w in world.points_within(&pose.translation(), max_range) {
        let p = to_sensor.transform_point(&w);
        let range = p.norm();
        if range > max_range {
            continue;
        }
        let bin = ((p.y.atan2(p.x) / angular_step).round() as i64).rem_euclid(bins as i64) as usize;
        match best[bin] {
            Some((r, _)) if r <= range => {}
            _ => best[bin] = Some((range, p)),
        }
    }
    let points = best.into_iter().flatten().map(|(_, p)| p).collect();
    Ok(PointCloud2::from_finite(points, SENSOR_FRAME))
}

/// Dropout, jitter and ghost injection, followed by range gating.
///
/// Each point survives with `keep_prob` and is displaced by isotropic
/// Gaussian noise; `Poisson(ghost_rate)` ghosts are appended uniformly over
/// the disk of radius `max_range`.
pub fn degrade(scan: &PointCloud2, p: &DegradeParams, seed: u64) -> Result<PointCloud2> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(scan.len());
    for q in scan.points() {
        if !rng.random_bool(p.keep_prob) {
            continue;
        }
        if p.jitter_sigma > 0.0 {
            let dx: f64 = rng.sample(StandardNormal);
            let dy: f64 = rng.sample(StandardNormal);
            points.push(Point2::new(
                q.x + p.jitter_sigma * dx,
                q.y + p.jitter_sigma * dy,
            ));
        } else {
            points.push(*q);
        }
    }
    if p.ghost_rate > 0.0 {
        let ghosts = Poisson::new(p.ghost_rate)
            .map_err(|e| invalid(format!("ghost_rate: {e}")))?
            .sample(&mut rng) as usize;
        for _ in 0..ghosts {
            let r = p.max_range * rng.random::<f64>().sqrt();
            let a = TAU * rng.random::<f64>();
            points.push(Point2::new(r * a.cos(), r * a.sin()));
        }
    }
    let out = PointCloud2::from_finite(points, scan.frame());
    Ok(range_filter(&out, p.max_range))
}

/// Histogram of nearest-neighbor distances with an overflow bucket.
///
/// Bin `i` covers `[edges[i], edges[i+1])`; distances `>= edges.last()` go to
/// `overflow`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistogram {
    bin_edges: Vec<f64>,
    counts: Vec<usize>,
    overflow: usize,
    total: usize,
}

impl DistanceHistogram {
    /// Edges must start at 0 and be strictly increasing and finite.
    pub fn new(bin_edges: Vec<f64>) -> Result<Self> {
        if bin_edges.len() < 2 {
            return Err(invalid("a histogram needs at least two bin edges"));
        }
        if bin_edges[0] != 0.0 {
            return Err(invalid(format!(
                "first bin edge must be 0, got {}",
                bin_edges[0]
            )));
        }
        if bin_edges.iter().any(|e| !e.is_finite()) || bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("bin edges must be finite and strictly increasing"));
        }
        let counts = vec![0; bin_edges.len() - 1];
        Ok(Self {
            bin_edges,
            counts,
            overflow: 0,
            total: 0,
        })
    }

    /// `0, step, 2·step, …, max` (inclusive of `max` when it lands on the grid).
    pub fn uniform_edges(step: f64, max: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && max > 0.0 && step.is_finite() && max.is_finite()) {
            return Err(invalid(format!("bad bin spec step={step} max={max}")));
        }
        let n = (max / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| i as f64 * step).collect())
    }

    /// Default edges `0:0.25:5` m.
    pub fn default_edges() -> Vec<f64> {
        Self::uniform_edges(0.25, 5.0).expect("static bin spec")
    }

    pub fn add(&mut self, d: f64) {
        self.total += 1;
        // index of the first edge strictly greater than d
        let k = self.bin_edges.partition_point(|&e| e <= d);
        if k >= self.bin_edges.len() {
            self.overflow += 1;
        } else if k > 0 {
            self.counts[k - 1] += 1;
        } else {
            // negative distances cannot occur; keep totals consistent anyway
            self.counts[0] += 1;
        }
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn overflow(&self) -> usize {
        self.overflow
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Fraction of distances strictly below `d`, where `d` is a bin edge or
    /// `+∞`. An empty histogram reports 1.
    pub fn fraction_within(&self, d: f64) -> Result<f64> {
        let below = if d == f64::INFINITY {
            self.total
        } else {
            let k = self
                .bin_edges
                .iter()
                .position(|&e| e == d)
                .ok_or(Error::NotABinEdge(d))?;
            self.counts[..k].iter().sum()
        };
        if self.total == 0 {
            return Ok(1.0);
        }
        Ok(below as f64 / self.total as f64)
    }

    /// CSV rows `bin_lo,bin_hi,count` plus a final `overflow` row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,count\n");
        for (w, c) in self.bin_edges.windows(2).zip(&self.counts) {
            s.push_str(&format!("{},{},{}\n", w[0], w[1], c));
        }
        s.push_str(&format!("overflow,,{}\n", self.overflow));
        s
    }
}

/// Bins the distance from every `fake` point to its nearest `real` point.
pub fn nn_distance_histogram(
    fake: &PointCloud2,
    real: &PointCloud2,
    bin_edges: Vec<f64>,
) -> Result<DistanceHistogram> {
    if real.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut hist = DistanceHistogram::new(bin_edges)?;
    let index = PointMap::build(real.clone())?;
    for p in fake.points() {
        hist.add(index.nearest_distance(p));
    }
    Ok(hist)
}

/// Free-function form of [`DistanceHistogram::fraction_within`].
pub fn fraction_within(h: &DistanceHistogram, d: f64) -> Result<f64> {
    h.fraction_within(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GLOBAL_FRAME;
    use proptest::prelude::prop;
    use proptest::{prop_assert, prop_assert_eq, proptest};

    fn cloud(pts: &[(f64, f64)], frame: &str) -> PointCloud2 {
        PointCloud2::new(pts.iter().map(|&p| p.into()).collect(), frame).unwrap()
    }

    fn circle(radius: f64, n: usize) -> PointCloud2 {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let a = TAU * i as f64 / n as f64;
                (radius * a.cos(), radius * a.sin())
            })
            .collect();
        cloud(&pts, GLOBAL_FRAME)
    }

    #[test]
    fn simulate_circle_returns_constant_range() {
        let world = PointMap::build(circle(10.0, 720)).unwrap();
        let scan = simulate_scan(&world, &Pose2::identity(), 30.0, 1f64.to_radians()).unwrap();
        assert_eq!(scan.len(), 360);
        assert!(scan.points().iter().all(|p| (p.norm() - 10.0).abs() < 1e-9));
    }

    #[test]
    fn simulate_single_landmark() {
        let world = PointMap::build(cloud(&[(5.0, 0.0)], GLOBAL_FRAME)).unwrap();
        let scan = simulate_scan(&world, &Pose2::identity(), 30.0, 0.01).unwrap();
        assert_eq!(scan.points(), &[Point2::new(5.0, 0.0)]);

        // same landmark seen from a moved, rotated sensor
        let pose = Pose2::new(5.0, -3.0, std::f64::consts::FRAC_PI_2);
        let scan = simulate_scan(&world, &pose, 30.0, 0.01).unwrap();
        assert!((scan.points()[0].x - 3.0).abs() < 1e-12 && scan.points()[0].y.abs() < 1e-12);
    }

    #[test]
    fn simulate_respects_range_and_occlusion() {
        let world =
            PointMap::build(cloud(&[(5.0, 0.0), (8.0, 0.0), (50.0, 1.0)], GLOBAL_FRAME)).unwrap();
        let scan = simulate_scan(&world, &Pose2::identity(), 30.0, 0.01).unwrap();
        assert_eq!(scan.points(), &[Point2::new(5.0, 0.0)]);
        assert!(simulate_scan(&world, &Pose2::identity(), 30.0, 0.0).is_err());
    }

    #[test]
    fn degrade_identity_and_empty() {
        let c = circle(10.0, 100);
        assert_eq!(degrade(&c, &DegradeParams::identity(30.0), 1).unwrap(), c);
        let drop_all = DegradeParams {
            keep_prob: 0.0,
            ..DegradeParams::identity(30.0)
        };
        assert!(degrade(&c, &drop_all, 1).unwrap().is_empty());
    }

    #[test]
    fn degrade_survivors_within_binomial_band() {
        let pts: Vec<(f64, f64)> = (0..10_000).map(|i| (i as f64 * 1e-3, 1.0)).collect();
        let c = cloud(&pts, SENSOR_FRAME);
        let p = DegradeParams {
            keep_prob: 0.6,
            ..DegradeParams::identity(100.0)
        };
        let sigma = (10_000.0f64 * 0.6 * 0.4).sqrt();
        for seed in 0..5 {
            let n = degrade(&c, &p, seed).unwrap().len() as f64;
            assert!((n - 6000.0).abs() <= 3.0 * sigma, "seed {seed}: {n}");
        }
    }

    #[test]
    fn ghosts_land_in_the_disk() {
        let p = DegradeParams {
            ghost_rate: 500.0,
            ..DegradeParams::identity(20.0)
        };
        let out = degrade(&PointCloud2::empty(SENSOR_FRAME), &p, 4).unwrap();
        assert!(out.len() > 400 && out.len() < 600);
        assert!(out.points().iter().all(|q| q.norm() <= 20.0));
    }

    #[test]
    fn invalid_degrade_params() {
        let mut p = DegradeParams::identity(10.0);
        p.keep_prob = 1.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn histogram_of_identical_clouds() {
        let c = circle(10.0, 50);
        let h = nn_distance_histogram(&c, &c, DistanceHistogram::default_edges()).unwrap();
        assert_eq!(h.counts()[0], 50);
        assert_eq!(h.total(), 50);
        assert_eq!(h.fraction_within(0.25).unwrap(), 1.0);
        assert_eq!(h.fraction_within(5.0).unwrap(), 1.0);
    }

    #[test]
    fn histogram_of_shifted_grid() {
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                pts.push((i as f64 * 20.0, j as f64 * 20.0));
            }
        }
        let real = cloud(&pts, GLOBAL_FRAME);
        let shifted: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x + 1.5, y)).collect();
        let h = nn_distance_histogram(
            &cloud(&shifted, GLOBAL_FRAME),
            &real,
            DistanceHistogram::default_edges(),
        )
        .unwrap();
        // [1.5, 1.75) is bin 6
        assert_eq!(h.counts()[6], 100);
        assert_eq!(h.fraction_within(1.5).unwrap(), 0.0);
        assert_eq!(h.fraction_within(1.75).unwrap(), 1.0);
    }

    #[test]
    fn histogram_errors() {
        let c = circle(1.0, 4);
        assert!(matches!(
            nn_distance_histogram(
                &c,
                &PointCloud2::empty(GLOBAL_FRAME),
                DistanceHistogram::default_edges()
            ),
            Err(Error::EmptyCloud)
        ));
        let h = nn_distance_histogram(&c, &c, DistanceHistogram::default_edges()).unwrap();
        assert!(matches!(h.fraction_within(0.3), Err(Error::NotABinEdge(_))));
        assert_eq!(h.fraction_within(f64::INFINITY).unwrap(), 1.0);
        assert!(DistanceHistogram::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(DistanceHistogram::new(vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn jitter_keeps_points_close() {
        let pts: Vec<(f64, f64)> = (0..2000)
            .map(|i| ((i % 50) as f64 * 3.0, (i / 50) as f64 * 3.0))
            .collect();
        let clean = cloud(&pts, SENSOR_FRAME);
        let p = DegradeParams {
            jitter_sigma: 0.2,
            ..DegradeParams::identity(1000.0)
        };
        let noisy = degrade(&clean, &p, 12).unwrap();
        let h = nn_distance_histogram(&noisy, &clean, DistanceHistogram::default_edges()).unwrap();
        assert!(h.fraction_within(1.0).unwrap() >= 0.99);
    }

    #[test]
    fn csv_layout() {
        let c = circle(1.0, 4);
        let h = nn_distance_histogram(&c, &c, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(
            h.to_csv(),
            "bin_lo,bin_hi,count\n0,0.5,4\n0.5,1,0\noverflow,,0\n"
        );
    }

    proptest! {
        #[test]
        fn histogram_matches_brute_force(
            fake in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64), 0..100),
            real in prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64), 1..100),
        ) {
            let f = cloud(&fake, GLOBAL_FRAME);
            let r = cloud(&real, GLOBAL_FRAME);
            let edges = DistanceHistogram::default_edges();
            let h = nn_distance_histogram(&f, &r, edges.clone()).unwrap();
            let mut counts = vec![0usize; edges.len() - 1];
            let mut overflow = 0;
            for p in f.points() {
                let d = r.points().iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min);
                match (0..edges.len() - 1).find(|&i| edges[i] <= d && d < edges[i + 1]) {
                    Some(i) => counts[i] += 1,
                    None => overflow += 1,
                }
            }
            prop_assert_eq!(h.counts(), &counts[..]);
            prop_assert_eq!(h.overflow(), overflow);
            prop_assert_eq!(h.counts().iter().sum::<usize>() + h.overflow(), h.total());
            let mut last = 0.0;
            for &e in &edges {
                let fr = h.fraction_within(e).unwrap();
                prop_assert!(fr >= last);
                last = fr;
            }
        }

        #[test]
        fn simulated_returns_stay_in_range(
            world in prop::collection::vec((-40.0..40.0f64, -40.0..40.0f64), 1..300),
            x in -10.0..10.0f64, y in -10.0..10.0f64, t in -3.0..3.0f64, range in 1.0..30.0f64,
        ) {
            let map = PointMap::build(cloud(&world, GLOBAL_FRAME)).unwrap();
            let scan = simulate_scan(&map, &Pose2::new(x, y, t), range, 0.02).unwrap();
            prop_assert!(scan.points().iter().all(|p| p.norm() <= range));
        }
    }
}
