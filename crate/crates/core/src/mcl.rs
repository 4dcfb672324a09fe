//! Particle-filter localization on a prior point map.
//!
//! Prediction composes each particle with the ICP-estimated motion plus
//! Gaussian noise. The update multiplies each particle's weight by `N^λ`,
//! where `N` is the number of scan points lying strictly within `d_th` of
//! the map once the scan is placed at the particle's pose. Weights carry over
//! between resamples; resampling is systematic and gated on the effective
//! sample size.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::geometry::{wrap_angle, PointCloud2, Pose2};
use crate::icp::{icp_align, IcpParams};
use crate::map::PointMap;

const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pose: Pose2,
    pub weight: f64,
}

/// Non-empty set of weighted pose hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    particles: Vec<Particle>,
    normalized: bool,
}

impl ParticleSet {
    /// Fails on an empty set or any negative or non-finite weight.
    pub fn new(particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(invalid("particle set must be non-empty"));
        }
        if let Some(i) = particles
            .iter()
            .position(|p| !(p.weight.is_finite() && p.weight >= 0.0) || !p.pose.is_finite())
        {
            return Err(invalid(format!(
                "particle {i} has an invalid pose or weight"
            )));
        }
        let sum: f64 = particles.iter().map(|p| p.weight).sum();
        Ok(Self {
            particles,
            normalized: (sum - 1.0).abs() <= NORMALIZATION_TOL,
        })
    }

    /// Equal weights `1/n` over `poses`.
    pub fn uniform(poses: impl IntoIterator<Item = Pose2>) -> Result<Self> {
        let poses: Vec<Pose2> = poses.into_iter().collect();
        let w = 1.0 / poses.len().max(1) as f64;
        Self::new(
            poses
                .into_iter()
                .map(|pose| Particle { pose, weight: w })
                .collect(),
        )
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.particles.iter().map(|p| p.weight)
    }

    /// Rescales weights to sum to one. Returns `false` (and leaves weights
    /// untouched) when they sum to zero.
    pub fn normalize(&mut self) -> bool {
        let sum: f64 = self.weights().sum();
        if sum.is_nan() || sum <= 0.0 {
            return false;
        }
        for p in &mut self.particles {
            p.weight /= sum;
        }
        self.normalized = true;
        true
    }

    fn reset_uniform(&mut self) {
        let w = 1.0 / self.particles.len() as f64;
        for p in &mut self.particles {
            p.weight = w;
        }
        self.normalized = true;
    }
}

/// Standard deviations of an initial particle cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSpread {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_yaw: f64,
}

impl PoseSpread {
    pub const ZERO: PoseSpread = PoseSpread {
        sigma_x: 0.0,
        sigma_y: 0.0,
        sigma_yaw: 0.0,
    };
}

/// Robot-frame Gaussian motion noise. Each standard deviation is inflated in
/// proportion to the size of the commanded motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionNoise {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub sigma_yaw: f64,
    pub alpha_trans: f64,
    pub alpha_rot: f64,
}

impl Default for MotionNoise {
    fn default() -> Self {
        Self {
            sigma_x: 0.05,
            sigma_y: 0.05,
            sigma_yaw: 0.01,
            alpha_trans: 0.1,
            alpha_rot: 0.1,
        }
    }
}

impl MotionNoise {
    pub const ZERO: MotionNoise = MotionNoise {
        sigma_x: 0.0,
        sigma_y: 0.0,
        sigma_yaw: 0.0,
        alpha_trans: 0.0,
        alpha_rot: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
            ("sigma_yaw", self.sigma_yaw),
            ("alpha_trans", self.alpha_trans),
            ("alpha_rot", self.alpha_rot),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!(
                    "motion noise {name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Standard deviations `(x, y, yaw)` for motion `u`.
    pub fn std_devs(&self, u: &Pose2) -> (f64, f64, f64) {
        let trans = u.translation().norm();
        (
            self.sigma_x + self.alpha_trans * trans,
            self.sigma_y + self.alpha_trans * trans,
            self.sigma_yaw + self.alpha_rot * u.yaw().abs(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MclConfig {
    pub n_particles: usize,
    /// Exponent applied to the matched-point count.
    pub lambda: f64,
    /// Match distance threshold, meters.
    pub d_th: f64,
    pub motion_noise: MotionNoise,
    /// Resample when ESS drops below this fraction of the particle count.
    pub ess_threshold_fraction: f64,
    pub rng_seed: u64,
    /// Consecutive degenerate updates tolerated before localization is
    /// declared lost.
    pub lost_window: usize,
}

impl Default for MclConfig {
    fn default() -> Self {
        Self {
            n_particles: 500,
            lambda: 2.0,
            d_th: 1.0,
            motion_noise: MotionNoise::default(),
            ess_threshold_fraction: 0.5,
            rng_seed: 0,
            lost_window: 10,
        }
    }
}

impl MclConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(invalid("n_particles must be >= 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.d_th > 0.0 && self.d_th.is_finite()) {
            return Err(invalid(format!("d_th must be > 0, got {}", self.d_th)));
        }
        if !(self.ess_threshold_fraction > 0.0 && self.ess_threshold_fraction <= 1.0) {
            return Err(invalid(format!(
                "ess_threshold_fraction must be in (0, 1], got {}",
                self.ess_threshold_fraction
            )));
        }
        if self.lost_window == 0 {
            return Err(invalid("lost_window must be >= 1"));
        }
        self.motion_noise.validate()
    }
}

/// `n` particles drawn independently around `center`, uniformly weighted.
pub fn init_particles(
    center: Pose2,
    spread: PoseSpread,
    n: usize,
    seed: u64,
) -> Result<ParticleSet> {
    if n == 0 {
        return Err(invalid("n_particles must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses: Vec<Pose2> = (0..n)
        .map(|_| {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            let zt: f64 = rng.sample(StandardNormal);
            Pose2::new(
                center.x() + spread.sigma_x * zx,
                center.y() + spread.sigma_y * zy,
                center.yaw() + spread.sigma_yaw * zt,
            )
        })
        .collect();
    ParticleSet::uniform(poses)
}

/// Global initialization: positions uniform over the map's bounding box,
/// headings uniform over the circle.
pub fn init_uniform(map: &PointMap, n: usize, seed: u64) -> Result<ParticleSet> {
    if n == 0 {
        return Err(invalid("n_particles must be >= 1"));
    }
    let (lo, hi) = map.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poses: Vec<Pose2> = (0..n)
        .map(|_| {
            let x = lo.x + (hi.x - lo.x) * rng.random::<f64>();
            let y = lo.y + (hi.y - lo.y) * rng.random::<f64>();
            let yaw = std::f64::consts::TAU * rng.random::<f64>();
            Pose2::new(x, y, yaw)
        })
        .collect();
    ParticleSet::uniform(poses)
}

/// Moves every particle by `u` plus robot-frame Gaussian noise. Weights are
/// kept; the normalized flag is cleared.
pub fn predict(ps: &ParticleSet, u: Pose2, noise: &MotionNoise, seed: u64) -> ParticleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sx, sy, st) = noise.std_devs(&u);
    let particles = ps
        .particles
        .iter()
        .map(|p| {
            let zx: f64 = rng.sample(StandardNormal);
            let zy: f64 = rng.sample(StandardNormal);
            let zt: f64 = rng.sample(StandardNormal);
            let noisy = Pose2::new(u.x() + sx * zx, u.y() + sy * zy, u.yaw() + st * zt);
            Particle {
                pose: p.pose.compose(&noisy),
                weight: p.weight,
            }
        })
        .collect();
    ParticleSet {
        particles,
        normalized: false,
    }
}

/// Result of a measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightUpdate {
    pub particles: ParticleSet,
    /// Matched-point count of every particle, in particle order.
    pub matched: Vec<usize>,
    /// Every particle scored zero; weights were reset to uniform.
    pub degenerate: bool,
}

impl WeightUpdate {
    pub fn max_matched(&self) -> usize {
        self.matched.iter().copied().max().unwrap_or(0)
    }
}

/// Multiplies each prior weight by `N^λ` and normalizes.
///
/// `N` is [`PointMap::matched_count_at`] of `scan` (sensor frame) placed at
/// the particle pose. If every posterior weight is zero the set is reset to
/// uniform and flagged degenerate.
pub fn update_weights(
    ps: &ParticleSet,
    scan: &PointCloud2,
    map: &PointMap,
    d_th: f64,
    lambda: f64,
) -> WeightUpdate {
    let matched: Vec<usize> = ps
        .particles
        .iter()
        .map(|p| map.matched_count_at(&p.pose, scan, d_th))
        .collect();
    let n_max = matched.iter().copied().max().unwrap_or(0);

    let mut particles = ps.clone();
    if n_max > 0 {
        // (N/N_max)^λ normalizes to the same weights as N^λ
        for (p, &n) in particles.particles.iter_mut().zip(&matched) {
            p.weight *= (n as f64 / n_max as f64).powf(lambda);
        }
    }
    let degenerate = n_max == 0 || !particles.normalize();
    if degenerate {
        particles.reset_uniform();
    }
    WeightUpdate {
        particles,
        matched,
        degenerate,
    }
}

/// `1 / Σ w²` of a normalized set.
pub fn effective_sample_size(ps: &ParticleSet) -> f64 {
    let sq: f64 = ps.weights().map(|w| w * w).sum();
    1.0 / sq
}

/// Offspring counts of systematic resampling with first pointer `u0 ∈ [0, 1/n)`.
pub fn systematic_counts(weights: &[f64], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let step = 1.0 / n as f64;
    let mut counts = vec![0; n];
    let mut cumulative = weights[0];
    let mut i = 0;
    for k in 0..n {
        let pointer = u0 + k as f64 * step;
        while pointer >= cumulative && i + 1 < n {
            i += 1;
            cumulative += weights[i];
        }
        counts[i] += 1;
    }
    counts
}

/// Systematic (low-variance) resampling; output weights are uniform.
pub fn resample(ps: &ParticleSet, seed: u64) -> ParticleSet {
    let n = ps.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = rng.random::<f64>() / n as f64;
    let weights: Vec<f64> = ps.weights().collect();
    let counts = systematic_counts(&weights, u0);
    let w = 1.0 / n as f64;
    let particles = ps
        .particles
        .iter()
        .zip(counts)
        .flat_map(|(p, c)| {
            std::iter::repeat_n(
                Particle {
                    pose: p.pose,
                    weight: w,
                },
                c,
            )
        })
        .collect();
    ParticleSet {
        particles,
        normalized: true,
    }
}

/// Weighted mean position and weighted circular-mean heading.
pub fn estimate_pose(ps: &ParticleSet) -> Pose2 {
    let (mut x, mut y, mut s, mut c, mut total) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &ps.particles {
        x += p.weight * p.pose.x();
        y += p.weight * p.pose.y();
        s += p.weight * p.pose.yaw().sin();
        c += p.weight * p.pose.yaw().cos();
        total += p.weight;
    }
    Pose2::new(x / total, y / total, s.atan2(c))
}

/// Per-step filter diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub index: usize,
    pub estimate: Pose2,
    /// Motion applied in the prediction (identity for the first frame).
    pub motion: Pose2,
    /// ESS after the measurement update, before any resampling.
    pub ess: f64,
    pub max_matched: usize,
    pub degenerate: bool,
    /// ICP failed and the previous motion was reused.
    pub dead_reckoned: bool,
    pub resampled: bool,
    pub icp_rms: Option<f64>,
}

impl StepReport {
    /// Header matching [`StepReport::tsv_line`].
    pub const TSV_HEADER: &'static str = "step\tx\ty\tyaw\tess\tmax_matched\tflags";

    /// `step, x, y, yaw, ess, max_matched, flags`, tab separated.
    pub fn tsv_line(&self) -> String {
        let mut flags = Vec::new();
        if self.degenerate {
            flags.push("degenerate");
        }
        if self.dead_reckoned {
            flags.push("dead_reckoned");
        }
        if self.resampled {
            flags.push("resampled");
        }
        let flags = if flags.is_empty() {
            "-".to_owned()
        } else {
            flags.join(",")
        };
        let mut line = String::new();
        let _ = write!(
            line,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.3}\t{}\t{}",
            self.index,
            self.estimate.x(),
            self.estimate.y(),
            self.estimate.yaw(),
            self.ess,
            self.max_matched,
            flags
        );
        line
    }
}

/// Recursive filter state: particles, the last applied motion, and the
/// degeneracy streak used to detect lost localization.
#[derive(Debug, Clone)]
pub struct Localizer {
    particles: ParticleSet,
    cfg: MclConfig,
    icp: IcpParams,
    last_motion: Option<Pose2>,
    steps: usize,
    degenerate_streak: usize,
    rng: ChaCha8Rng,
}

impl Localizer {
    pub fn new(particles: ParticleSet, cfg: MclConfig, icp: IcpParams) -> Result<Self> {
        cfg.validate()?;
        icp.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        Ok(Self {
            particles,
            cfg,
            icp,
            last_motion: None,
            steps: 0,
            degenerate_streak: 0,
            rng,
        })
    }

    /// Filter seeded around `start` with `cfg.n_particles` particles.
    pub fn at_pose(
        start: Pose2,
        spread: PoseSpread,
        cfg: MclConfig,
        icp: IcpParams,
    ) -> Result<Self> {
        let mut seeder = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x9e37_79b9_7f4a_7c15);
        let particles = init_particles(start, spread, cfg.n_particles, seeder.random())?;
        Self::new(particles, cfg, icp)
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn config(&self) -> &MclConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Measurement update without motion, for the first frame.
    pub fn correct(&mut self, scan: &PointCloud2, map: &PointMap) -> Result<StepReport> {
        self.measure(scan, map, Pose2::identity(), false, None)
    }

    /// One full recursion: ICP odometry from `scan_prev` to `scan_curr`,
    /// prediction, update and conditional resampling.
    ///
    /// ICP aligns the current scan onto the previous one, which yields the
    /// robot motion directly. It is seeded with the previous motion
    /// (constant velocity). If ICP fails the previous motion is reused and
    /// the step is flagged.
    pub fn step(
        &mut self,
        scan_prev: &PointCloud2,
        scan_curr: &PointCloud2,
        map: &PointMap,
    ) -> Result<StepReport> {
        let seed_motion = self.last_motion.unwrap_or_else(Pose2::identity);
        let (motion, dead_reckoned, icp_rms) =
            match icp_align(scan_curr, scan_prev, seed_motion, &self.icp) {
                Ok(r) => (r.transform, false, Some(r.rms_residual)),
                Err(_) => (seed_motion, true, None),
            };
        self.last_motion = Some(motion);
        let predicted = predict(
            &self.particles,
            motion,
            &self.cfg.motion_noise,
            self.rng.random(),
        );
        self.particles = predicted;
        self.measure(scan_curr, map, motion, dead_reckoned, icp_rms)
    }

    fn measure(
        &mut self,
        scan: &PointCloud2,
        map: &PointMap,
        motion: Pose2,
        dead_reckoned: bool,
        icp_rms: Option<f64>,
    ) -> Result<StepReport> {
        let index = self.steps;
        self.steps += 1;

        let update = update_weights(&self.particles, scan, map, self.cfg.d_th, self.cfg.lambda);
        let max_matched = update.max_matched();
        let degenerate = update.degenerate;
        self.particles = update.particles;

        if degenerate {
            self.degenerate_streak += 1;
            if self.degenerate_streak >= self.cfg.lost_window {
                return Err(Error::LostLocalization {
                    step: index,
                    streak: self.degenerate_streak,
                });
            }
        } else {
            self.degenerate_streak = 0;
        }

        let ess = effective_sample_size(&self.particles);
        let estimate = estimate_pose(&self.particles);
        let resampled = ess < self.cfg.ess_threshold_fraction * self.particles.len() as f64;
        if resampled {
            self.particles = resample(&self.particles, self.rng.random());
        }
        Ok(StepReport {
            index,
            estimate,
            motion,
            ess,
            max_matched,
            degenerate,
            dead_reckoned,
            resampled,
            icp_rms,
        })
    }
}

/// Heading difference wrapped to `(-π, π]`.
pub fn yaw_error(a: &Pose2, b: &Pose2) -> f64 {
    wrap_angle(a.yaw() - b.yaw())
}
