//! Point-to-point 2D ICP.
//!
//! Used for frame-to-frame odometry (the motion input of the filter) and for
//! registering whole-session maps into one global frame.

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point2, PointCloud2, Pose2};
use crate::map::PointMap;

/// Iteration limits and gates for [`icp_align`].
#[derive(Debug, Clone, PartialEq)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Convergence threshold on the per-iteration translation change, meters.
    pub translation_eps: f64,
    /// Convergence threshold on the per-iteration rotation change, radians.
    pub rotation_eps: f64,
    /// Correspondences farther apart than this are rejected.
    pub max_correspondence_dist: f64,
    pub min_correspondences: usize,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self::odometry()
    }
}

impl IcpParams {
    /// Gates sized for small inter-scan motion.
    pub fn odometry() -> Self {
        Self {
            max_iterations: 50,
            translation_eps: 1e-5,
            rotation_eps: 1e-5,
            max_correspondence_dist: 2.0,
            min_correspondences: 10,
        }
    }

    /// Wide gates for aligning whole-session maps.
    pub fn session() -> Self {
        Self {
            max_iterations: 200,
            max_correspondence_dist: 10.0,
            ..Self::odometry()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid("icp max_iterations must be positive"));
        }
        for (name, v) in [
            ("translation_eps", self.translation_eps),
            ("rotation_eps", self.rotation_eps),
            ("max_correspondence_dist", self.max_correspondence_dist),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(invalid(format!("icp {name} must be positive, got {v}")));
            }
        }
        if self.min_correspondences < 3 {
            return Err(invalid(format!(
                "icp min_correspondences must be >= 3, got {}",
                self.min_correspondences
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source coordinates into the target frame.
    pub transform: Pose2,
    /// RMS distance of the final correspondences after the last update.
    pub rms_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub correspondence_count: usize,
    /// Post-update RMS residual of every iteration, in order.
    pub residual_history: Vec<f64>,
}

/// Closed-form least-squares rigid transform taking each source point onto
/// its paired target point.
///
/// On centered pairs `a_i`, `b_i` the optimal rotation is
/// `atan2(Σ a_i × b_i, Σ a_i · b_i)`; the translation then maps the source
/// centroid onto the target centroid.
pub fn best_rigid_transform(pairs: &[(Point2, Point2)]) -> Result<Pose2> {
    if pairs.len() < 2 {
        return Err(Error::DegenerateGeometry("fewer than two correspondences"));
    }
    let n = pairs.len() as f64;
    let (mut cs, mut ct) = (Point2::default(), Point2::default());
    for (s, t) in pairs {
        cs.x += s.x;
        cs.y += s.y;
        ct.x += t.x;
        ct.y += t.y;
    }
    cs = Point2::new(cs.x / n, cs.y / n);
    ct = Point2::new(ct.x / n, ct.y / n);

    let (mut dot, mut cross, mut spread) = (0.0, 0.0, 0.0);
    for (s, t) in pairs {
        let (ax, ay) = (s.x - cs.x, s.y - cs.y);
        let (bx, by) = (t.x - ct.x, t.y - ct.y);
        dot += ax * bx + ay * by;
        cross += ax * by - ay * bx;
        spread += ax * ax + ay * ay;
    }
    let scale = 1.0 + cs.x * cs.x + cs.y * cs.y;
    if spread <= 1e-24 * n * scale {
        return Err(Error::DegenerateGeometry("all source points coincide"));
    }
    let yaw = cross.atan2(dot);
    let (s, c) = yaw.sin_cos();
    Ok(Pose2::new(
        ct.x - (cs.x * c - cs.y * s),
        ct.y - (cs.x * s + cs.y * c),
        yaw,
    ))
}

/// Aligns `source` onto `target`, starting from `init`.
///
/// Alternates nearest-neighbor correspondence against an index on `target`
/// (pairs farther than `max_correspondence_dist` are dropped) with
/// [`best_rigid_transform`] until the update falls below both epsilons or
/// `max_iterations` is reached.
pub fn icp_align(
    source: &PointCloud2,
    target: &PointCloud2,
    init: Pose2,
    params: &IcpParams,
) -> Result<IcpResult> {
    params.validate()?;
    let required = params.min_correspondences;
    if source.len() < required || target.len() < required {
        return Err(Error::CorrespondenceStarvation {
            found: source.len().min(target.len()),
            required,
        });
    }
    let index = PointMap::build(target.clone())?;
    icp_align_indexed(source, &index, init, params)
}

/// [`icp_align`] against a prebuilt target index.
pub fn icp_align_indexed(
    source: &PointCloud2,
    target: &PointMap,
    init: Pose2,
    params: &IcpParams,
) -> Result<IcpResult> {
    params.validate()?;
    let mut transform = init;
    let mut history = Vec::new();
    let mut pairs = Vec::with_capacity(source.len());
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;
        pairs.clear();
        for s in source.points() {
            let (q, d) = target.nearest(&transform.transform_point(s));
            if d <= params.max_correspondence_dist {
                pairs.push((*s, q));
            }
        }
        if pairs.len() < params.min_correspondences {
            return Err(Error::CorrespondenceStarvation {
                found: pairs.len(),
                required: params.min_correspondences,
            });
        }
        let updated = best_rigid_transform(&pairs)?;
        let sq: f64 = pairs
            .iter()
            .map(|(s, t)| updated.transform_point(s).distance_squared(t))
            .sum();
        history.push((sq / pairs.len() as f64).sqrt());

        let delta = transform.inverse().compose(&updated);
        transform = updated;
        if delta.translation().norm() < params.translation_eps
            && delta.yaw().abs() < params.rotation_eps
        {
            converged = true;
            break;
        }
    }

    Ok(IcpResult {
        transform,
        rms_residual: history.last().copied().unwrap_or(0.0),
        iterations,
        converged,
        correspondence_count: pairs.len(),
        residual_history: history,
    })
}

/// Registers session map `map_b` onto reference map `map_a`.
///
/// The returned transform maps `map_b` coordinates into `map_a`'s frame, so a
/// pose `p` from session b becomes `transform ∘ p` in the global frame.
pub fn register_session(
    map_a: &PointCloud2,
    map_b: &PointCloud2,
    init: Pose2,
) -> Result<IcpResult> {
    if map_a.is_empty() || map_b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    icp_align(map_b, map_a, init, &IcpParams::session())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{wrap_angle, SENSOR_FRAME};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut impl Rng, n: usize, half: f64) -> PointCloud2 {
        let pts = (0..n)
            .map(|_| Point2::new(rng.random_range(-half..half), rng.random_range(-half..half)))
            .collect();
        PointCloud2::new(pts, SENSOR_FRAME).unwrap()
    }

    fn sum_sq(pairs: &[(Point2, Point2)], t: &Pose2) -> f64 {
        pairs
            .iter()
            .map(|(s, q)| t.transform_point(s).distance_squared(q))
            .sum()
    }

    #[test]
    fn identity_pairs_give_identity() {
        let pairs: Vec<_> = [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0)]
            .iter()
            .map(|&p| (Point2::from(p), Point2::from(p)))
            .collect();
        let t = best_rigid_transform(&pairs).unwrap();
        assert!(t.translation().norm() < 1e-12 && t.yaw().abs() < 1e-12);
    }

    #[test]
    fn recovers_pure_rotation() {
        let rot = Pose2::new(0.0, 0.0, 30f64.to_radians());
        let pairs: Vec<_> = [(1.0, 0.0), (0.0, 3.0), (-2.0, 1.0), (4.0, -1.5)]
            .iter()
            .map(|&p| {
                let s = Point2::from(p);
                (s, rot.transform_point(&s))
            })
            .collect();
        let t = best_rigid_transform(&pairs).unwrap();
        assert!(t.x().abs() < 1e-9 && t.y().abs() < 1e-9);
        assert!((t.yaw() - 30f64.to_radians()).abs() < 1e-9);
    }

    #[test]
    fn degenerate_pairs_are_rejected() {
        let p = Point2::new(1.0, 1.0);
        let pairs = vec![(p, Point2::new(0.0, 0.0)), (p, Point2::new(2.0, 5.0))];
        assert!(matches!(
            best_rigid_transform(&pairs),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(best_rigid_transform(&pairs[..1]).is_err());
    }

    #[test]
    fn closed_form_beats_random_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = Pose2::new(0.4, -0.3, 0.2);
        let pairs: Vec<_> = (0..60)
            .map(|_| {
                let s = Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
                let mut t = truth.transform_point(&s);
                t.x += rng.random_range(-0.3..0.3);
                t.y += rng.random_range(-0.3..0.3);
                (s, t)
            })
            .collect();
        let best = best_rigid_transform(&pairs).unwrap();
        let e = sum_sq(&pairs, &best);
        for _ in 0..1000 {
            let scale = 10f64.powf(rng.random_range(-6.0..0.0));
            let perturbed = Pose2::new(
                best.x() + rng.random_range(-1.0..1.0) * scale,
                best.y() + rng.random_range(-1.0..1.0) * scale,
                best.yaw() + rng.random_range(-0.1..0.1) * scale,
            );
            assert!(e <= sum_sq(&pairs, &perturbed) + 1e-9);
        }
    }

    #[test]
    fn self_alignment_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_cloud(&mut rng, 200, 20.0);
        let r = icp_align(&c, &c, Pose2::identity(), &IcpParams::odometry()).unwrap();
        assert!(r.converged);
        assert_eq!(r.rms_residual, 0.0);
        assert!(r.transform.translation().norm() < 1e-12 && r.transform.yaw().abs() < 1e-12);
    }

    #[test]
    fn recovers_known_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let source = random_cloud(&mut rng, 200, 20.0);
        let truth = Pose2::new(0.5, 0.2, 5f64.to_radians());
        let target = truth.transform_cloud(&source, SENSOR_FRAME);
        let r = icp_align(&source, &target, Pose2::identity(), &IcpParams::odometry()).unwrap();
        assert!(r.converged);
        assert!((r.transform.x() - 0.5).abs() < 1e-6);
        assert!((r.transform.y() - 0.2).abs() < 1e-6);
        assert!(wrap_angle(r.transform.yaw() - 5f64.to_radians()).abs() < 1e-6);
    }

    #[test]
    fn too_few_points_starve() {
        let c = PointCloud2::new(vec![Point2::new(0.0, 0.0); 3], SENSOR_FRAME).unwrap();
        assert!(matches!(
            icp_align(&c, &c, Pose2::identity(), &IcpParams::odometry()),
            Err(Error::CorrespondenceStarvation { .. })
        ));
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = IcpParams::odometry();
        p.min_correspondences = 2;
        assert!(p.validate().is_err());
        let mut p = IcpParams::odometry();
        p.max_correspondence_dist = 0.0;
        assert!(p.validate().is_err());
    }
}
