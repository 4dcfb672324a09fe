//! Trajectory accuracy metrics: positional/yaw RMSE and the fraction of
//! poses inside joint (position, heading) error buckets.

use crate::error::{invalid, Error, Result};
use crate::geometry::{wrap_angle, Pose2};

/// Default association window, seconds.
pub const DEFAULT_MAX_DT: f64 = 0.1;

/// Default joint error buckets `(meters, degrees)`.
pub const DEFAULT_BUCKETS: [(f64, f64); 3] = [(1.0, 2.0), (2.0, 5.0), (5.0, 10.0)];

/// Timestamped poses with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<(f64, Pose2)>,
}

impl Trajectory {
    pub fn new(samples: Vec<(f64, Pose2)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("trajectory must be non-empty"));
        }
        if samples
            .iter()
            .any(|(t, p)| !t.is_finite() || !p.is_finite())
        {
            return Err(invalid("trajectory contains non-finite values"));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(invalid(format!(
                "timestamps must be strictly increasing (sample {})",
                i + 1
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, Pose2)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the sample whose timestamp is closest to `t` (earlier sample
    /// wins ties).
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = self.samples.partition_point(|(ts, _)| *ts < t);
        if k == 0 {
            return 0;
        }
        if k == self.samples.len() {
            return k - 1;
        }
        if t - self.samples[k - 1].0 <= self.samples[k].0 - t {
            k - 1
        } else {
            k
        }
    }
}

/// `(estimate, ground truth)` pose pair.
pub type PosePair = (Pose2, Pose2);

#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub pairs: Vec<PosePair>,
    /// Estimates with no ground truth within `max_dt`.
    pub unmatched: usize,
}

/// Pairs each estimate with the nearest-in-time ground-truth pose, dropping
/// estimates farther than `max_dt` from every ground-truth timestamp.
pub fn associate(est: &Trajectory, gt: &Trajectory, max_dt: f64) -> Result<Association> {
    let mut pairs = Vec::with_capacity(est.len());
    let mut unmatched = 0;
    for (t, pose) in est.samples() {
        let (tg, pg) = gt.samples()[gt.nearest_index(*t)];
        if (tg - t).abs() <= max_dt {
            pairs.push((*pose, pg));
        } else {
            unmatched += 1;
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoAssociations);
    }
    Ok(Association { pairs, unmatched })
}

fn errors(pair: &PosePair) -> (f64, f64) {
    let (e, g) = pair;
    let pos = e.translation().distance(&g.translation());
    let yaw = wrap_angle(e.yaw() - g.yaw()).abs().to_degrees();
    (pos, yaw)
}

/// `(positional RMSE in meters, yaw RMSE in degrees)`. Yaw differences are
/// wrapped before squaring.
pub fn rmse(pairs: &[PosePair]) -> (f64, f64) {
    let n = pairs.len() as f64;
    let (mut pos, mut yaw) = (0.0, 0.0);
    for (e, g) in pairs {
        let dx = e.x() - g.x();
        let dy = e.y() - g.y();
        let dt = wrap_angle(e.yaw() - g.yaw());
        pos += dx * dx + dy * dy;
        yaw += dt * dt;
    }
    ((pos / n).sqrt(), (yaw / n).sqrt().to_degrees())
}

/// For each `(meters, degrees)` bucket, the fraction of pairs whose
/// positional error is below the first AND whose wrapped heading error is
/// below the second. Both comparisons are strict.
pub fn error_distribution(pairs: &[PosePair], buckets: &[(f64, f64)]) -> Vec<f64> {
    let errs: Vec<(f64, f64)> = pairs.iter().map(errors).collect();
    buckets
        .iter()
        .map(|&(pos_th, yaw_th)| {
            let hits = errs
                .iter()
                .filter(|(p, y)| *p < pos_th && *y < yaw_th)
                .count();
            hits as f64 / errs.len().max(1) as f64
        })
        .collect()
}

/// Position and heading error of every pair, `(meters, degrees)`.
pub fn pair_errors(pairs: &[PosePair]) -> Vec<(f64, f64)> {
    pairs.iter().map(errors).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub positional_rmse: f64,
    /// Degrees.
    pub yaw_rmse: f64,
    pub buckets: Vec<(f64, f64)>,
    pub bucket_fractions: Vec<f64>,
    pub n_evaluated: usize,
    /// Estimates left out of the metrics (no ground truth in time).
    pub n_excluded: usize,
}

impl ErrorReport {
    pub fn from_association(assoc: &Association, buckets: &[(f64, f64)]) -> Result<Self> {
        if buckets
            .windows(2)
            .any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1)
        {
            return Err(invalid(
                "buckets must be sorted ascending in both thresholds",
            ));
        }
        let (positional_rmse, yaw_rmse) = rmse(&assoc.pairs);
        Ok(Self {
            positional_rmse,
            yaw_rmse,
            buckets: buckets.to_vec(),
            bucket_fractions: error_distribution(&assoc.pairs, buckets),
            n_evaluated: assoc.pairs.len(),
            n_excluded: assoc.unmatched,
        })
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "positional_rmse_m = {:.9}\nyaw_rmse_deg = {:.9}\n",
            self.positional_rmse, self.yaw_rmse
        );
        for ((p, y), f) in self.buckets.iter().zip(&self.bucket_fractions) {
            s.push_str(&format!("within_{p}m_{y}deg = {f:.9}\n"));
        }
        s.push_str(&format!(
            "n_evaluated = {}\nn_excluded = {}\n",
            self.n_evaluated, self.n_excluded
        ));
        s
    }

    /// Header line and one value row.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["positional_rmse_m".to_owned(), "yaw_rmse_deg".to_owned()];
        let mut row = vec![
            format!("{:.9}", self.positional_rmse),
            format!("{:.9}", self.yaw_rmse),
        ];
        for ((p, y), f) in self.buckets.iter().zip(&self.bucket_fractions) {
            header.push(format!("within_{p}m_{y}deg"));
            row.push(format!("{f:.9}"));
        }
        header.push("n_evaluated".into());
        header.push("n_excluded".into());
        row.push(self.n_evaluated.to_string());
        row.push(self.n_excluded.to_string());
        format!("{}\n{}\n", header.join(","), row.join(","))
    }
}
