//! Flat `section.key = value` run configuration for `localize`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use radloc::icp::IcpParams;
use radloc::mcl::{MclConfig, PoseSpread};
use radloc::scan::DEFAULT_THRESHOLD;
use radloc::Pose2;

use crate::error::{io_err, CliError, Result};

const KEYS: &[&str] = &[
    "map.path",
    "scans.manifest",
    "scans.threshold",
    "init.x",
    "init.y",
    "init.yaw",
    "init.sigma_x",
    "init.sigma_y",
    "init.sigma_yaw",
    "mcl.particles",
    "mcl.lambda",
    "mcl.d_th",
    "mcl.ess_fraction",
    "mcl.seed",
    "mcl.lost_window",
    "motion.sigma_x",
    "motion.sigma_y",
    "motion.sigma_yaw",
    "motion.alpha_trans",
    "motion.alpha_rot",
    "icp.max_iterations",
    "icp.translation_eps",
    "icp.rotation_eps",
    "icp.max_correspondence_dist",
    "icp.min_correspondences",
    "output.dir",
];

/// Everything `localize` needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Prior map, CSV cloud or PGM image.
    pub map_path: PathBuf,
    /// `timestamp path` manifest of the scans.
    pub scans_manifest: PathBuf,
    /// Occupancy threshold for PGM scans and maps.
    pub scan_threshold: u8,
    pub initial_pose: Pose2,
    pub initial_spread: PoseSpread,
    pub mcl: MclConfig,
    pub icp: IcpParams,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// A configuration with default filter settings.
    pub fn new(map_path: PathBuf, scans_manifest: PathBuf, output_dir: PathBuf) -> Self {
        Self {
            map_path,
            scans_manifest,
            scan_threshold: DEFAULT_THRESHOLD,
            initial_pose: Pose2::identity(),
            initial_spread: PoseSpread::ZERO,
            mcl: MclConfig::default(),
            icp: IcpParams::odometry(),
            output_dir,
        }
    }

    /// Parses config text. Relative paths are joined onto `base`. Nothing
    /// on disk is touched.
    pub fn parse(text: &str, name: &str, base: &Path) -> Result<Self> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_err = |message: String| CliError::ConfigLine {
                source_name: name.to_owned(),
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| line_err("expected `section.key = value`".into()))?;
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(line_err(format!("unknown key `{key}`")));
            }
            if entries.insert(key, (line_no, value)).is_some() {
                return Err(line_err(format!("duplicate key `{key}`")));
            }
        }

        let get = |key: &str| entries.get(key).copied();
        let path = |key: &str| -> Result<PathBuf> {
            let (_, v) = get(key)
                .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))?;
            let p = PathBuf::from(v);
            Ok(if p.is_absolute() { p } else { base.join(p) })
        };
        let mut cfg = RunConfig::new(
            path("map.path")?,
            path("scans.manifest")?,
            path("output.dir")?,
        );

        fn set<T: FromStr>(
            name: &str,
            entry: Option<(usize, &str)>,
            key: &str,
            slot: &mut T,
        ) -> Result<()> {
            if let Some((line, v)) = entry {
                *slot = v.parse().map_err(|_| CliError::ConfigLine {
                    source_name: name.to_owned(),
                    line,
                    message: format!("`{v}` is not a valid value for `{key}`"),
                })?;
            }
            Ok(())
        }
        macro_rules! field {
            ($key:literal, $slot:expr) => {
                set(name, get($key), $key, &mut $slot)?
            };
        }

        let (mut x, mut y, mut yaw) = (0.0, 0.0, 0.0);
        field!("init.x", x);
        field!("init.y", y);
        field!("init.yaw", yaw);
        cfg.initial_pose = Pose2::new(x, y, yaw);
        field!("scans.threshold", cfg.scan_threshold);
        field!("init.sigma_x", cfg.initial_spread.sigma_x);
        field!("init.sigma_y", cfg.initial_spread.sigma_y);
        field!("init.sigma_yaw", cfg.initial_spread.sigma_yaw);
        field!("mcl.particles", cfg.mcl.n_particles);
        field!("mcl.lambda", cfg.mcl.lambda);
        field!("mcl.d_th", cfg.mcl.d_th);
        field!("mcl.ess_fraction", cfg.mcl.ess_threshold_fraction);
        field!("mcl.seed", cfg.mcl.rng_seed);
        field!("mcl.lost_window", cfg.mcl.lost_window);
        field!("motion.sigma_x", cfg.mcl.motion_noise.sigma_x);
        field!("motion.sigma_y", cfg.mcl.motion_noise.sigma_y);
        field!("motion.sigma_yaw", cfg.mcl.motion_noise.sigma_yaw);
        field!("motion.alpha_trans", cfg.mcl.motion_noise.alpha_trans);
        field!("motion.alpha_rot", cfg.mcl.motion_noise.alpha_rot);
        field!("icp.max_iterations", cfg.icp.max_iterations);
        field!("icp.translation_eps", cfg.icp.translation_eps);
        field!("icp.rotation_eps", cfg.icp.rotation_eps);
        field!(
            "icp.max_correspondence_dist",
            cfg.icp.max_correspondence_dist
        );
        field!("icp.min_correspondences", cfg.icp.min_correspondences);
        if !(x.is_finite() && y.is_finite() && yaw.is_finite()) {
            return Err(CliError::Config("initial pose must be finite".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates a config file; the map and the manifest must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let cfg = Self::parse(&text, &path.display().to_string(), base)?;
        for (what, p) in [
            ("map", &cfg.map_path),
            ("scan manifest", &cfg.scans_manifest),
        ] {
            if !p.is_file() {
                return Err(CliError::Config(format!(
                    "{what} `{}` does not exist",
                    p.display()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.initial_spread;
        for (k, v) in [
            ("init.sigma_x", s.sigma_x),
            ("init.sigma_y", s.sigma_y),
            ("init.sigma_yaw", s.sigma_yaw),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("`{k}` must be >= 0, got {v}")));
            }
        }
        self.mcl
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.icp
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// Config text that parses back to `self` (paths written as stored).
    pub fn to_text(&self) -> String {
        let p = &self.initial_pose;
        let s = &self.initial_spread;
        let m = &self.mcl;
        let n = &m.motion_noise;
        let i = &self.icp;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("map.path", &self.map_path.display());
        kv("scans.manifest", &self.scans_manifest.display());
        kv("scans.threshold", &self.scan_threshold);
        kv("init.x", &p.x());
        kv("init.y", &p.y());
        kv("init.yaw", &p.yaw());
        kv("init.sigma_x", &s.sigma_x);
        kv("init.sigma_y", &s.sigma_y);
        kv("init.sigma_yaw", &s.sigma_yaw);
        kv("mcl.particles", &m.n_particles);
        kv("mcl.lambda", &m.lambda);
        kv("mcl.d_th", &m.d_th);
        kv("mcl.ess_fraction", &m.ess_threshold_fraction);
        kv("mcl.seed", &m.rng_seed);
        kv("mcl.lost_window", &m.lost_window);
        kv("motion.sigma_x", &n.sigma_x);
        kv("motion.sigma_y", &n.sigma_y);
        kv("motion.sigma_yaw", &n.sigma_yaw);
        kv("motion.alpha_trans", &n.alpha_trans);
        kv("motion.alpha_rot", &n.alpha_rot);
        kv("icp.max_iterations", &i.max_iterations);
        kv("icp.translation_eps", &i.translation_eps);
        kv("icp.rotation_eps", &i.rotation_eps);
        kv("icp.max_correspondence_dist", &i.max_correspondence_dist);
        kv("icp.min_correspondences", &i.min_correspondences);
        kv("output.dir", &self.output_dir.display());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "map.path = map.csv\nscans.manifest = scans/manifest.txt\noutput.dir = out\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = RunConfig::parse(MINIMAL, "t", Path::new("/data")).unwrap();
        assert_eq!(cfg.map_path, Path::new("/data/map.csv"));
        assert_eq!(cfg.scans_manifest, Path::new("/data/scans/manifest.txt"));
        assert_eq!(cfg.mcl, MclConfig::default());
        assert_eq!(cfg.icp, IcpParams::odometry());
        assert_eq!(cfg.scan_threshold, DEFAULT_THRESHOLD);
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::new("m.csv".into(), "man.txt".into(), "o".into());
        cfg.initial_pose = Pose2::new(1.5, -2.25, 0.3);
        cfg.mcl.rng_seed = 99;
        cfg.mcl.lambda = 3.5;
        cfg.icp.max_correspondence_dist = 1.25;
        let back = RunConfig::parse(&cfg.to_text(), "t", Path::new("")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_line() {
        let text = format!("{MINIMAL}# comment\nmcl.lambda = fast\n");
        match RunConfig::parse(&text, "t", Path::new("")) {
            Err(CliError::ConfigLine { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let text = format!("{MINIMAL}bogus.key = 1\n");
        assert!(matches!(
            RunConfig::parse(&text, "t", Path::new("")),
            Err(CliError::ConfigLine { line: 4, .. })
        ));
        let text = format!("{MINIMAL}map.path = again\n");
        assert!(matches!(
            RunConfig::parse(&text, "t", Path::new("")),
            Err(CliError::ConfigLine { .. })
        ));
        assert!(matches!(
            RunConfig::parse("map.path = a\n", "t", Path::new("")),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn invariants_are_enforced() {
        for bad in [
            "mcl.d_th = 0",
            "mcl.particles = 0",
            "mcl.ess_fraction = 1.5",
            "icp.min_correspondences = 2",
            "init.sigma_x = -1",
            "motion.sigma_yaw = -0.1",
            "init.x = NaN",
        ] {
            let text = format!("{MINIMAL}{bad}\n");
            let err = RunConfig::parse(&text, "t", Path::new("")).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{bad}");
        }
    }
}
