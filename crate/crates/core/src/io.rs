//! File formats.
//!
//! * Range images: binary PGM (`P5`), 8-bit, square. The resolution travels
//!   in a `# resolution_m_per_px=<float>` comment.
//! * Point clouds: CSV with header `x,y`, meters.
//! * Trajectories: CSV with header `t,x,y,yaw` (seconds, meters, radians).
//! * Scan manifests: `timestamp path` per line, `#` comments, paths relative
//!   to the manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::Trajectory;
use crate::geometry::{Point2, PointCloud2, Pose2};
use crate::scan::{image_to_cloud, RangeImage, DEFAULT_RESOLUTION};

const RESOLUTION_KEY: &str = "resolution_m_per_px=";

fn byte_err(name: &str, offset: usize, message: impl Into<String>) -> Error {
    Error::ParseBytes {
        source_name: name.to_owned(),
        offset,
        message: message.into(),
    }
}

fn line_err(name: &str, line: usize, message: impl Into<String>) -> Error {
    Error::ParseLine {
        source_name: name.to_owned(),
        line,
        message: message.into(),
    }
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    name: &'a str,
    resolution: Option<f64>,
}

impl PgmCursor<'_> {
    /// Skips whitespace and comments, harvesting the resolution comment.
    fn skip_space(&mut self) -> Result<()> {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    let start = self.pos + 1;
                    let end = self.bytes[start..]
                        .iter()
                        .position(|&b| b == b'\n')
                        .map_or(self.bytes.len(), |i| start + i);
                    let text = String::from_utf8_lossy(&self.bytes[start..end]);
                    if let Some(v) = text.trim().strip_prefix(RESOLUTION_KEY) {
                        let r: f64 = v.trim().parse().map_err(|_| {
                            byte_err(self.name, start, format!("bad resolution `{v}`"))
                        })?;
                        self.resolution = Some(r);
                    }
                    self.pos = end;
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
        Ok(())
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space()?;
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(byte_err(self.name, start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| byte_err(self.name, start, format!("{what} out of range")))
    }
}

/// Parses a binary PGM. `resolution` overrides the embedded comment; with
/// neither, the default 0.25 m/px applies.
pub fn parse_pgm(bytes: &[u8], name: &str, resolution: Option<f64>) -> Result<RangeImage> {
    if !bytes.starts_with(b"P5") {
        return Err(byte_err(name, 0, "missing P5 magic"));
    }
    let mut cur = PgmCursor {
        bytes,
        pos: 2,
        name,
        resolution: None,
    };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(byte_err(
            name,
            maxval_at,
            format!("unsupported maxval {maxval}"),
        ));
    }
    if width != height {
        return Err(byte_err(
            name,
            2,
            format!("image must be square, got {width}x{height}"),
        ));
    }
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(byte_err(name, cur.pos, "expected whitespace before raster"));
    }
    let start = cur.pos + 1;
    let needed = width * height;
    let available = bytes.len() - start;
    if available < needed {
        return Err(byte_err(
            name,
            bytes.len(),
            format!("truncated raster: {available} of {needed} bytes"),
        ));
    }
    let res = resolution.or(cur.resolution).unwrap_or(DEFAULT_RESOLUTION);
    RangeImage::new(width, res, bytes[start..start + needed].to_vec())
}

pub fn read_pgm(path: &Path, resolution: Option<f64>) -> Result<RangeImage> {
    let bytes = fs::read(path)?;
    parse_pgm(&bytes, &path.display().to_string(), resolution)
}

pub fn encode_pgm(img: &RangeImage) -> Vec<u8> {
    let mut out = format!(
        "P5\n# {RESOLUTION_KEY}{}\n{} {}\n255\n",
        img.resolution(),
        img.width(),
        img.height()
    )
    .into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn write_pgm(path: &Path, img: &RangeImage) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

fn parse_fields<const N: usize>(line: &str, name: &str, lineno: usize) -> Result<[f64; N]> {
    let mut out = [0.0f64; N];
    let mut fields = line.split(',');
    for slot in out.iter_mut() {
        let f = fields
            .next()
            .ok_or_else(|| line_err(name, lineno, format!("expected {N} fields")))?;
        *slot = f
            .trim()
            .parse()
            .map_err(|_| line_err(name, lineno, format!("`{}` is not a number", f.trim())))?;
        if !slot.is_finite() {
            return Err(line_err(name, lineno, "non-finite value"));
        }
    }
    if fields.next().is_some() {
        return Err(line_err(name, lineno, format!("expected {N} fields")));
    }
    Ok(out)
}

/// Data lines of a CSV with the given header, numbered from 1.
fn csv_rows<'a>(
    text: &'a str,
    header: &str,
    name: &str,
) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.find(|(_, l)| !l.is_empty()) {
        Some((_, h)) if h.replace(' ', "") == header => {}
        Some((n, h)) => {
            return Err(line_err(
                name,
                n,
                format!("expected header `{header}`, got `{h}`"),
            ))
        }
        None => return Err(line_err(name, 1, format!("missing header `{header}`"))),
    }
    Ok(lines.filter(|(_, l)| !l.is_empty()))
}

pub fn parse_cloud_csv(text: &str, name: &str, frame: &str) -> Result<PointCloud2> {
    let mut points = Vec::new();
    for (n, line) in csv_rows(text, "x,y", name)? {
        let [x, y] = parse_fields::<2>(line, name, n)?;
        points.push(Point2::new(x, y));
    }
    PointCloud2::new(points, frame)
}

pub fn read_cloud_csv(path: &Path, frame: &str) -> Result<PointCloud2> {
    let text = fs::read_to_string(path)?;
    parse_cloud_csv(&text, &path.display().to_string(), frame)
}

/// Values are written in shortest round-trip form, so reading back is exact.
pub fn encode_cloud_csv(cloud: &PointCloud2) -> String {
    let mut s = String::with_capacity(16 * cloud.len() + 4);
    s.push_str("x,y\n");
    for p in cloud.points() {
        let _ = writeln!(s, "{},{}", p.x, p.y);
    }
    s
}

pub fn write_cloud_csv(path: &Path, cloud: &PointCloud2) -> Result<()> {
    fs::write(path, encode_cloud_csv(cloud))?;
    Ok(())
}

/// Reads a scan from CSV, or from PGM (binarized at `threshold`) when the
/// extension is `.pgm`.
pub fn read_scan(path: &Path, threshold: u8, frame: &str) -> Result<PointCloud2> {
    let is_pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let img = read_pgm(path, None)?;
        Ok(image_to_cloud(&img, threshold))
    } else {
        read_cloud_csv(path, frame)
    }
}

pub fn parse_trajectory_csv(text: &str, name: &str) -> Result<Trajectory> {
    let mut samples = Vec::new();
    let mut last_line = 1;
    for (n, line) in csv_rows(text, "t,x,y,yaw", name)? {
        let [t, x, y, yaw] = parse_fields::<4>(line, name, n)?;
        samples.push((t, Pose2::new(x, y, yaw)));
        last_line = n;
    }
    Trajectory::new(samples).map_err(|e| line_err(name, last_line, e.to_string()))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path)?;
    parse_trajectory_csv(&text, &path.display().to_string())
}

/// Header plus one fixed-precision row per sample.
pub fn encode_trajectory_csv<'a>(samples: impl IntoIterator<Item = &'a (f64, Pose2)>) -> String {
    let mut s = String::from("t,x,y,yaw\n");
    for (t, p) in samples {
        let _ = writeln!(s, "{:.6},{:.9},{:.9},{:.12}", t, p.x(), p.y(), p.yaw());
    }
    s
}

pub fn write_trajectory_csv<'a>(
    path: &Path,
    samples: impl IntoIterator<Item = &'a (f64, Pose2)>,
) -> Result<()> {
    fs::write(path, encode_trajectory_csv(samples))?;
    Ok(())
}

/// One manifest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub timestamp: f64,
    pub path: PathBuf,
}

/// Parses `timestamp path` lines; relative paths resolve against `base`.
pub fn parse_manifest(text: &str, name: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
    let mut out: Vec<ManifestEntry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let n = i + 1;
        let (ts, path) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| line_err(name, n, "expected `timestamp path`"))?;
        let timestamp: f64 = ts
            .parse()
            .map_err(|_| line_err(name, n, format!("`{ts}` is not a timestamp")))?;
        if !timestamp.is_finite() {
            return Err(line_err(name, n, "non-finite timestamp"));
        }
        if out.last().is_some_and(|e| e.timestamp >= timestamp) {
            return Err(line_err(name, n, "timestamps must be strictly increasing"));
        }
        let path = PathBuf::from(path.trim());
        out.push(ManifestEntry {
            timestamp,
            path: if path.is_absolute() {
                path
            } else {
                base.join(path)
            },
        });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, &path.display().to_string(), base)
}
