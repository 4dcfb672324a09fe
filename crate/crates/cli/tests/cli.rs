use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use radloc::geometry::SENSOR_FRAME;
use radloc::io::{encode_cloud_csv, encode_trajectory_csv, read_cloud_csv};
use radloc::surrogate::{degrade, nn_distance_histogram, DegradeParams, DistanceHistogram};
use radloc::{Point2, PointCloud2, Pose2};
use tempfile::tempdir;

fn radloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radloc"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn pgm(size: usize, lit: &[(usize, usize)]) -> Vec<u8> {
    let mut bytes = format!("P5\n{size} {size}\n255\n").into_bytes();
    let mut px = vec![0u8; size * size];
    for &(r, c) in lit {
        px[r * size + c] = 255;
    }
    bytes.extend(px);
    bytes
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(radloc(&[]).status.code(), Some(1));
    assert_eq!(radloc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(radloc(&["eval", "--est", "a.csv"]).status.code(), Some(1));
    assert_eq!(radloc(&["--help"]).status.code(), Some(0));
}

#[test]
fn convert_images() {
    let dir = tempdir().unwrap();
    let black = dir.path().join("black.pgm");
    fs::write(&black, pgm(512, &[])).unwrap();
    let out = dir.path().join("black.csv");
    let o = radloc(&["convert", "--image", p(&black), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "x,y\n");
    assert_eq!(stdout(&o).trim(), "0 points");

    let single = dir.path().join("single.pgm");
    fs::write(&single, pgm(512, &[(255, 255)])).unwrap();
    let out = dir.path().join("single.csv");
    let o = radloc(&["convert", "--image", p(&single), "--out", p(&out)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), "x,y\n-0.125,0.125\n");

    let truncated = dir.path().join("trunc.pgm");
    let mut bytes = pgm(64, &[]);
    bytes.truncate(bytes.len() - 100);
    fs::write(&truncated, &bytes).unwrap();
    let o = radloc(&[
        "convert",
        "--image",
        p(&truncated),
        "--out",
        p(&dir.path().join("t.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("byte"), "{}", stderr(&o));
}

#[test]
fn eval_reports_and_plots() {
    let dir = tempdir().unwrap();
    let gt: Vec<(f64, Pose2)> = (0..8)
        .map(|k| (k as f64 * 0.5, Pose2::new(k as f64, 0.0, 0.1)))
        .collect();
    let gt_path = dir.path().join("gt.csv");
    fs::write(&gt_path, encode_trajectory_csv(&gt)).unwrap();

    let out = dir.path().join("same");
    let o = radloc(&[
        "eval",
        "--est",
        p(&gt_path),
        "--gt",
        p(&gt_path),
        "--out-dir",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("positional_rmse_m = 0.000000000"));
    assert!(text.contains("yaw_rmse_deg = 0.000000000"));
    assert_eq!(text.matches("deg = 1.000000000").count(), 3);
    assert_eq!(fs::read_to_string(out.join("report.txt")).unwrap(), text);
    let svg = fs::read_to_string(out.join("plot.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    // alternate ±2 m lateral offsets: every error is exactly 2 m
    let est: Vec<(f64, Pose2)> = gt
        .iter()
        .enumerate()
        .map(|(k, (t, g))| {
            (
                *t,
                Pose2::new(g.x(), if k % 2 == 0 { 2.0 } else { -2.0 }, g.yaw()),
            )
        })
        .collect();
    let est_path = dir.path().join("est.csv");
    fs::write(&est_path, encode_trajectory_csv(&est)).unwrap();
    let o = radloc(&["eval", "--est", p(&est_path), "--gt", p(&gt_path)]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("positional_rmse_m = 2.000000000"),
        "{}",
        stdout(&o)
    );

    let shifted: Vec<(f64, Pose2)> = gt.iter().map(|(t, g)| (t + 0.2, *g)).collect();
    fs::write(&est_path, encode_trajectory_csv(&shifted)).unwrap();
    let o = radloc(&["eval", "--est", p(&est_path), "--gt", p(&gt_path)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_outputs() {
    let dir = tempdir().unwrap();
    let empty = dir.path().join("empty");
    let o = radloc(&["simulate", "--out", p(&empty), "--steps", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(empty.join("gt.csv")).unwrap(),
        "t,x,y,yaw\n"
    );
    assert_eq!(fs::read_to_string(empty.join("manifest.txt")).unwrap(), "");
    assert_eq!(fs::read_dir(empty.join("scans")).unwrap().count(), 0);

    let args = [
        "--steps",
        "12",
        "--seed",
        "5",
        "--keep",
        "0.7",
        "--jitter",
        "0.2",
        "--ghosts",
        "10",
        "--max-range",
        "25",
    ];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let mut v = vec!["simulate", "--out", p(d)];
        v.extend(args);
        assert!(radloc(&v).status.success());
    }
    let names = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d.join("scans"))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        v.sort();
        v
    };
    assert_eq!(names(&a).len(), 12);
    assert_eq!(names(&a), names(&b));
    for f in ["map.csv", "gt.csv", "manifest.txt", "localize.conf"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    for n in names(&a) {
        assert_eq!(
            fs::read(a.join("scans").join(&n)).unwrap(),
            fs::read(b.join("scans").join(&n)).unwrap()
        );
        let cloud = read_cloud_csv(&a.join("scans").join(&n), SENSOR_FRAME).unwrap();
        assert!(cloud.points().iter().all(|q| q.norm() <= 25.0));
    }
}

#[test]
fn localize_rejects_bad_configs_before_work() {
    let dir = tempdir().unwrap();
    fs::write(dir.path().join("manifest.txt"), "").unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        "map.path = missing.csv\nscans.manifest = manifest.txt\noutput.dir = out\n",
    )
    .unwrap();
    let o = radloc(&["localize", p(&conf)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing.csv"));
    assert!(!dir.path().join("out").exists());

    fs::write(dir.path().join("map.csv"), "x,y\n0,0\n").unwrap();
    fs::write(
        &conf,
        "map.path = map.csv\nscans.manifest = manifest.txt\noutput.dir = out\nmcl.d_th = -1\n",
    )
    .unwrap();
    assert_eq!(radloc(&["localize", p(&conf)]).status.code(), Some(1));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn similarity_matches_library() {
    let dir = tempdir().unwrap();
    let real = PointCloud2::new(
        (0..400)
            .map(|k| Point2::new((k % 20) as f64 * 0.7, (k / 20) as f64 * 0.7))
            .collect(),
        SENSOR_FRAME,
    )
    .unwrap();
    let real_path = dir.path().join("real.csv");
    fs::write(&real_path, encode_cloud_csv(&real)).unwrap();
    let hist = dir.path().join("h.csv");

    let o = radloc(&[
        "similarity",
        "--fake",
        p(&real_path),
        "--real",
        p(&real_path),
        "--out",
        p(&hist),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "within_1m = 1.000000\nwithin_2m = 1.000000\n");

    let params = DegradeParams {
        keep_prob: 0.8,
        jitter_sigma: 0.9,
        ghost_rate: 30.0,
        max_range: 30.0,
    };
    let fake = degrade(&real, &params, 3).unwrap();
    let fake_path = dir.path().join("fake.csv");
    fs::write(&fake_path, encode_cloud_csv(&fake)).unwrap();
    let o = radloc(&[
        "similarity",
        "--fake",
        p(&fake_path),
        "--real",
        p(&real_path),
        "--out",
        p(&hist),
    ]);
    assert!(o.status.success());
    let lib = nn_distance_histogram(&fake, &real, DistanceHistogram::default_edges()).unwrap();
    assert_eq!(
        stdout(&o),
        format!(
            "within_1m = {:.6}\nwithin_2m = {:.6}\n",
            lib.fraction_within(1.0).unwrap(),
            lib.fraction_within(2.0).unwrap()
        )
    );
    assert_eq!(fs::read_to_string(&hist).unwrap(), lib.to_csv());

    fs::write(&fake_path, "x,y\n1,2\n3,oops\n").unwrap();
    let o = radloc(&[
        "similarity",
        "--fake",
        p(&fake_path),
        "--real",
        p(&real_path),
        "--out",
        p(&hist),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    fs::write(&fake_path, "x,y\n").unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "x,y\n").unwrap();
    let o = radloc(&[
        "similarity",
        "--fake",
        p(&fake_path),
        "--real",
        p(&empty),
        "--out",
        p(&hist),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn icp_prints_transform() {
    let dir = tempdir().unwrap();
    let src = PointCloud2::new(
        (0..120)
            .map(|k| {
                let a = k as f64 * 0.37;
                Point2::new(
                    6.0 * a.cos() + 0.3 * (k % 7) as f64,
                    4.0 * a.sin() - 0.2 * (k % 5) as f64,
                )
            })
            .collect(),
        SENSOR_FRAME,
    )
    .unwrap();
    let truth = Pose2::new(0.3, -0.2, 0.05);
    let tgt = truth.transform_cloud(&src, SENSOR_FRAME);
    let (s, t) = (dir.path().join("s.csv"), dir.path().join("t.csv"));
    fs::write(&s, encode_cloud_csv(&src)).unwrap();
    fs::write(&t, encode_cloud_csv(&tgt)).unwrap();
    let o = radloc(&["icp", "--source", p(&s), "--target", p(&t)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let f: Vec<&str> = out.split_whitespace().collect();
    assert_eq!(f.len(), 6);
    assert!((f[0].parse::<f64>().unwrap() - 0.3).abs() < 1e-6);
    assert!((f[1].parse::<f64>().unwrap() + 0.2).abs() < 1e-6);
    assert!((f[2].parse::<f64>().unwrap() - 0.05).abs() < 1e-6);
    assert_eq!(f[5], "true");

    let o = radloc(&[
        "icp",
        "--source",
        p(&s),
        "--target",
        p(&t),
        "--init",
        "0.2,-0.1,0.0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}
