//! Subcommand implementations. Each returns the text printed on success.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use radloc::eval::{associate, pair_errors, ErrorReport, DEFAULT_BUCKETS};
use radloc::geometry::{GLOBAL_FRAME, SENSOR_FRAME};
use radloc::icp::{icp_align, register_session, IcpParams};
use radloc::io::{
    encode_cloud_csv, encode_trajectory_csv, read_cloud_csv, read_manifest, read_pgm, read_scan,
    read_trajectory_csv,
};
use radloc::mcl::{Localizer, StepReport};
use radloc::scan::image_to_cloud;
use radloc::sim::{generate, SensorSpec, TrajectorySpec, WorldSpec};
use radloc::surrogate::{nn_distance_histogram, DegradeParams, DistanceHistogram};
use radloc::{Error, PointCloud2, PointMap, Pose2};

use crate::args::{ConvertArgs, EvalArgs, IcpArgs, SimilarityArgs, SimulateArgs};
use crate::config::RunConfig;
use crate::error::{io_err, CliError, Result};
use crate::svg;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.tsv";

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io {
            path: path.to_owned(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        })
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn convert(a: &ConvertArgs) -> Result<String> {
    require_file(&a.image)?;
    let img = read_pgm(&a.image, a.resolution)?;
    let cloud = image_to_cloud(&img, a.threshold);
    write(&a.out, encode_cloud_csv(&cloud))?;
    Ok(format!("{} points\n", cloud.len()))
}

/// Runs the filter over the manifest. On lost localization the trajectory
/// up to the failure is still written and [`CliError::Lost`] returned.
pub fn localize(config_path: &Path) -> Result<String> {
    let cfg = RunConfig::load(config_path)?;
    let map = PointMap::build(read_scan(&cfg.map_path, cfg.scan_threshold, GLOBAL_FRAME)?)?;
    let entries = read_manifest(&cfg.scans_manifest)?;
    let mut loc = Localizer::at_pose(
        cfg.initial_pose,
        cfg.initial_spread,
        cfg.mcl.clone(),
        cfg.icp.clone(),
    )?;
    create_dir(&cfg.output_dir)?;

    let mut trajectory: Vec<(f64, Pose2)> = Vec::with_capacity(entries.len());
    let mut diagnostics = format!("{}\n", StepReport::TSV_HEADER);
    let mut prev: Option<PointCloud2> = None;
    let mut failure = None;
    for entry in &entries {
        let scan = match read_scan(&entry.path, cfg.scan_threshold, SENSOR_FRAME) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(CliError::from(e));
                break;
            }
        };
        let report = match &prev {
            None => loc.correct(&scan, &map),
            Some(p) => loc.step(p, &scan, &map),
        };
        match report {
            Ok(r) => {
                diagnostics.push_str(&r.tsv_line());
                diagnostics.push('\n');
                trajectory.push((entry.timestamp, r.estimate));
            }
            Err(e) => {
                failure = Some(e.into());
                break;
            }
        }
        prev = Some(scan);
    }

    let traj_path = cfg.output_dir.join(TRAJECTORY_FILE);
    write(&traj_path, encode_trajectory_csv(&trajectory))?;
    write(&cfg.output_dir.join(DIAGNOSTICS_FILE), diagnostics)?;
    match failure {
        Some(CliError::Core(Error::LostLocalization { step, .. })) => Err(CliError::Lost {
            step,
            trajectory: traj_path,
        }),
        Some(e) => Err(e),
        None => Ok(format!(
            "steps = {}\ntrajectory = {}\n",
            trajectory.len(),
            traj_path.display()
        )),
    }
}

pub fn eval(a: &EvalArgs) -> Result<String> {
    require_file(&a.est)?;
    require_file(&a.gt)?;
    let est = read_trajectory_csv(&a.est)?;
    let gt = read_trajectory_csv(&a.gt)?;
    let assoc = associate(&est, &gt, a.max_dt)?;
    let report = ErrorReport::from_association(&assoc, &DEFAULT_BUCKETS)?;
    let text = report.to_text();
    if let Some(dir) = &a.out_dir {
        create_dir(dir)?;
        write(&dir.join("report.txt"), &text)?;
        write(&dir.join("report.csv"), report.to_csv())?;
        write(
            &dir.join("plot.svg"),
            svg::render(&gt, &est, &pair_errors(&assoc.pairs)),
        )?;
    }
    Ok(text)
}

pub fn simulate(a: &SimulateArgs) -> Result<String> {
    let world = WorldSpec {
        seed: a.world_seed,
        ..WorldSpec::default()
    };
    let traj = TrajectorySpec {
        n_steps: a.steps,
        dt: a.dt,
        laps: a.laps,
    };
    let sensor = SensorSpec {
        max_range: a.max_range,
        angular_step: a.angular_step_deg.to_radians(),
    };
    let degradation = DegradeParams {
        keep_prob: a.keep,
        jitter_sigma: a.jitter,
        ghost_rate: a.ghosts,
        max_range: a.max_range,
    };
    let ds = generate(&world, &traj, &sensor, &degradation, a.seed)?;

    let scans_dir = a.out.join("scans");
    create_dir(&scans_dir)?;
    write(&a.out.join("map.csv"), encode_cloud_csv(&ds.map))?;
    let samples = ds.ground_truth.as_ref().map(|t| t.samples()).unwrap_or(&[]);
    write(&a.out.join("gt.csv"), encode_trajectory_csv(samples))?;
    let mut manifest = String::new();
    for (k, (scan, (t, _))) in ds.scans.iter().zip(samples).enumerate() {
        let name = format!("{k:06}.csv");
        write(&scans_dir.join(&name), encode_cloud_csv(scan))?;
        let _ = writeln!(manifest, "{t:.6} scans/{name}");
    }
    write(&a.out.join("manifest.txt"), manifest)?;

    let mut cfg = RunConfig::new(
        "map.csv".into(),
        "manifest.txt".into(),
        PathBuf::from("run"),
    );
    cfg.initial_pose = samples.first().map(|s| s.1).unwrap_or_else(Pose2::identity);
    cfg.mcl.n_particles = a.particles;
    cfg.mcl.rng_seed = a.seed;
    write(&a.out.join("localize.conf"), cfg.to_text())?;
    Ok(format!(
        "scans = {}\nmap_points = {}\n",
        ds.scans.len(),
        ds.map.len()
    ))
}

pub fn similarity(a: &SimilarityArgs) -> Result<String> {
    require_file(&a.fake)?;
    require_file(&a.real)?;
    let fake = read_cloud_csv(&a.fake, SENSOR_FRAME)?;
    let real = read_cloud_csv(&a.real, SENSOR_FRAME)?;
    let edges = DistanceHistogram::uniform_edges(a.bin_step, a.bin_max)?;
    let h = nn_distance_histogram(&fake, &real, edges)?;
    let (w1, w2) = (h.fraction_within(1.0)?, h.fraction_within(2.0)?);
    write(&a.out, h.to_csv())?;
    Ok(format!("within_1m = {w1:.6}\nwithin_2m = {w2:.6}\n"))
}

pub fn icp(a: &IcpArgs) -> Result<String> {
    require_file(&a.source)?;
    require_file(&a.target)?;
    let source = read_cloud_csv(&a.source, SENSOR_FRAME)?;
    let target = read_cloud_csv(&a.target, SENSOR_FRAME)?;
    let init = match &a.init {
        Some(v) if v.len() == 3 => Pose2::new(v[0], v[1], v[2]),
        Some(v) => {
            return Err(CliError::Usage(format!(
                "--init needs x,y,yaw, got {} values",
                v.len()
            )))
        }
        None => Pose2::identity(),
    };
    let r = if a.session {
        register_session(&target, &source, init)?
    } else {
        icp_align(&source, &target, init, &IcpParams::odometry())?
    };
    let t = r.transform;
    Ok(format!(
        "{:.9} {:.9} {:.9} {:.9} {} {}\n",
        t.x(),
        t.y(),
        t.yaw(),
        r.rms_residual,
        r.iterations,
        r.converged
    ))
}
