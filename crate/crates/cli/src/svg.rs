//! Deterministic SVG plot: ground truth and estimate overlaid, plus
//! histograms of position and heading error.

use std::fmt::Write as _;

use radloc::eval::Trajectory;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 20.0;
const HIST_BINS: usize = 20;

/// Renders the figure. `errors` are per-pair `(meters, degrees)`.
pub fn render(gt: &Trajectory, est: &Trajectory, errors: &[(f64, f64)]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );

    let side = HEIGHT - 2.0 * MARGIN;
    let frame = Frame::fit(gt, est, MARGIN, MARGIN, side);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{side}" height="{side}" fill="none" stroke="#999"/>"##
    );
    polyline(&mut s, "ground-truth", "#1f77b4", gt, &frame);
    polyline(&mut s, "estimate", "#d62728", est, &frame);

    let hx = side + 3.0 * MARGIN;
    let hw = WIDTH - hx - MARGIN;
    let hh = (HEIGHT - 3.0 * MARGIN) / 2.0;
    let pos: Vec<f64> = errors.iter().map(|e| e.0).collect();
    let yaw: Vec<f64> = errors.iter().map(|e| e.1).collect();
    histogram(
        &mut s,
        "position-error",
        "position error (m)",
        &pos,
        0.5,
        hx,
        MARGIN,
        hw,
        hh,
    );
    histogram(
        &mut s,
        "heading-error",
        "heading error (deg)",
        &yaw,
        1.0,
        hx,
        2.0 * MARGIN + hh,
        hw,
        hh,
    );
    s.push_str("</svg>\n");
    s
}

struct Frame {
    min_x: f64,
    min_y: f64,
    scale: f64,
    left: f64,
    top: f64,
    side: f64,
}

impl Frame {
    /// Equal-aspect mapping of both trajectories into a square box.
    fn fit(a: &Trajectory, b: &Trajectory, left: f64, top: f64, side: f64) -> Self {
        let pts = a
            .samples()
            .iter()
            .chain(b.samples())
            .map(|(_, p)| (p.x(), p.y()));
        let (mut x0, mut y0, mut x1, mut y1) = (
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for (x, y) in pts {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-9);
        let inner = side * 0.9;
        let scale = inner / span;
        // center the data in the box
        let min_x = x0 - ((side / scale) - (x1 - x0)) / 2.0;
        let min_y = y0 - ((side / scale) - (y1 - y0)) / 2.0;
        Self {
            min_x,
            min_y,
            scale,
            left,
            top,
            side,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.left + (x - self.min_x) * self.scale,
            self.top + self.side - (y - self.min_y) * self.scale,
        )
    }
}

fn polyline(s: &mut String, id: &str, color: &str, t: &Trajectory, f: &Frame) {
    let mut pts = String::new();
    for (i, (_, p)) in t.samples().iter().enumerate() {
        let (x, y) = f.map(p.x(), p.y());
        if i > 0 {
            pts.push(' ');
        }
        let _ = write!(pts, "{x:.2},{y:.2}");
    }
    let _ = writeln!(
        s,
        r#"<polyline id="{id}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>"#
    );
}

#[allow(clippy::too_many_arguments)]
fn histogram(
    s: &mut String,
    id: &str,
    label: &str,
    values: &[f64],
    unit: f64,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
) {
    let max = values.iter().copied().fold(0.0, f64::max);
    let upper = ((max / unit).floor() + 1.0) * unit;
    let mut counts = [0usize; HIST_BINS];
    for v in values {
        let b = ((v / upper) * HIST_BINS as f64) as usize;
        counts[b.min(HIST_BINS - 1)] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let plot_h = h - 16.0;
    let bar_w = w / HIST_BINS as f64;
    let _ = writeln!(s, r#"<g id="{id}">"#);
    let _ = writeln!(
        s,
        r##"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{plot_h:.2}" fill="none" stroke="#999"/>"##
    );
    for (i, &c) in counts.iter().enumerate() {
        let bh = plot_h * c as f64 / peak;
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{bh:.2}" fill="#555"/>"##,
            x + i as f64 * bar_w,
            y + plot_h - bh,
            bar_w * 0.9,
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{x:.2}" y="{:.2}" font-size="12" font-family="sans-serif">{label}: 0 to {upper:.2}, n = {}</text>"#,
        y + h - 2.0,
        values.len()
    );
    s.push_str("</g>\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use radloc::Pose2;

    fn line(n: usize, dy: f64) -> Trajectory {
        Trajectory::new(
            (0..n)
                .map(|k| (k as f64, Pose2::new(k as f64, dy, 0.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn one_polyline_per_trajectory_and_stable_output() {
        let gt = line(10, 0.0);
        let est = line(10, 0.5);
        let errs = vec![(0.5, 0.0); 10];
        let a = render(&gt, &est, &errs);
        assert_eq!(a, render(&gt, &est, &errs));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<g ").count(), a.matches("</g>").count());
    }

    #[test]
    fn single_point_does_not_divide_by_zero() {
        let t = line(1, 0.0);
        let svg = render(&t, &t, &[(0.0, 0.0)]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
