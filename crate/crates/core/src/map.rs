//! Immutable prior point map with exact nearest-neighbor queries.

use crate::error::{Error, Result};
use crate::geometry::{Point2, PointCloud2, Pose2};

const LEAF_SIZE: usize = 8;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    start: u32,
    end: u32,
    axis: u8,
    split: f64,
    left: u32,
    right: u32,
}

#[inline]
fn coord(p: &Point2, axis: u8) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

/// Static 2D kd-tree. Queries are exact.
#[derive(Debug, Clone)]
struct KdTree {
    points: Vec<Point2>,
    nodes: Vec<Node>,
}

impl KdTree {
    fn build(mut points: Vec<Point2>) -> Self {
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        let n = points.len();
        Self::build_node(&mut points, 0, n, &mut nodes);
        Self { points, nodes }
    }

    fn build_node(points: &mut [Point2], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
        let id = nodes.len() as u32;
        nodes.push(Node {
            start: start as u32,
            end: end as u32,
            axis: 0,
            split: 0.0,
            left: NONE,
            right: NONE,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let slice = &mut points[start..end];
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in slice.iter() {
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
            max_y = max_y.max(p.y);
        }
        let axis = u8::from(max_y - min_y > max_x - min_x);
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |a, b| coord(a, axis).total_cmp(&coord(b, axis)));
        let split = coord(&slice[mid], axis);
        let left = Self::build_node(points, start, start + mid, nodes);
        let right = Self::build_node(points, start + mid, end, nodes);
        let node = &mut nodes[id as usize];
        node.axis = axis;
        node.split = split;
        node.left = left;
        node.right = right;
        id
    }

    fn nearest(&self, q: &Point2) -> (f64, Point2) {
        let mut best = (f64::INFINITY, self.points[0]);
        self.nearest_in(0, q, &mut best);
        best
    }

    fn nearest_in(&self, id: u32, q: &Point2, best: &mut (f64, Point2)) {
        let node = &self.nodes[id as usize];
        if node.left == NONE {
            for p in &self.points[node.start as usize..node.end as usize] {
                let d2 = q.distance_squared(p);
                if d2 < best.0 {
                    *best = (d2, *p);
                }
            }
            return;
        }
        let diff = coord(q, node.axis) - node.split;
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.nearest_in(near, q, best);
        if diff * diff < best.0 {
            self.nearest_in(far, q, best);
        }
    }

    /// True when some point lies strictly closer than `radius`.
    fn any_within(&self, id: u32, q: &Point2, radius: f64) -> bool {
        let node = &self.nodes[id as usize];
        if node.left == NONE {
            return self.points[node.start as usize..node.end as usize]
                .iter()
                .any(|p| q.distance(p) < radius);
        }
        let diff = coord(q, node.axis) - node.split;
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        self.any_within(near, q, radius) || (diff.abs() < radius && self.any_within(far, q, radius))
    }

    fn collect_within(&self, id: u32, q: &Point2, radius: f64, out: &mut Vec<Point2>) {
        let node = &self.nodes[id as usize];
        if node.left == NONE {
            out.extend(
                self.points[node.start as usize..node.end as usize]
                    .iter()
                    .filter(|p| q.distance(p) <= radius),
            );
            return;
        }
        let diff = coord(q, node.axis) - node.split;
        if diff <= radius {
            self.collect_within(node.left, q, radius, out);
        }
        if -diff <= radius {
            self.collect_within(node.right, q, radius, out);
        }
    }
}

/// Prior map: global-frame points plus a spatial index built once over them.
#[derive(Debug, Clone)]
pub struct PointMap {
    cloud: PointCloud2,
    tree: KdTree,
}

impl PointMap {
    /// Builds the index. Fails on an empty cloud.
    pub fn build(points: PointCloud2) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyMap);
        }
        let tree = KdTree::build(points.points().to_vec());
        Ok(Self {
            cloud: points,
            tree,
        })
    }

    pub fn cloud(&self) -> &PointCloud2 {
        &self.cloud
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    /// Exact distance from `p` to the closest map point.
    pub fn nearest_distance(&self, p: &Point2) -> f64 {
        self.tree.nearest(p).0.sqrt()
    }

    /// Closest map point to `p` and its distance.
    pub fn nearest(&self, p: &Point2) -> (Point2, f64) {
        let (d2, q) = self.tree.nearest(p);
        (q, d2.sqrt())
    }

    /// Whether `p` has a map point strictly closer than `d_th`.
    #[inline]
    pub fn is_matched(&self, p: &Point2, d_th: f64) -> bool {
        self.tree.any_within(0, p, d_th)
    }

    /// Number of scan points whose nearest map distance is `< d_th`.
    /// The boundary `d == d_th` counts as unmatched.
    pub fn matched_count(&self, scan: &PointCloud2, d_th: f64) -> usize {
        scan.points()
            .iter()
            .filter(|p| self.is_matched(p, d_th))
            .count()
    }

    /// `matched_count` of `scan` after placing it at `pose`, without
    /// materializing the transformed cloud.
    pub fn matched_count_at(&self, pose: &Pose2, scan: &PointCloud2, d_th: f64) -> usize {
        scan.points()
            .iter()
            .filter(|p| self.is_matched(&pose.transform_point(p), d_th))
            .count()
    }

    /// All map points with `‖q − p‖ <= radius`, in index order.
    pub fn points_within(&self, p: &Point2, radius: f64) -> Vec<Point2> {
        let mut out = Vec::new();
        self.tree.collect_within(0, p, radius, &mut out);
        out
    }

    /// Axis-aligned bounds `(min, max)` of the map points.
    pub fn bounds(&self) -> (Point2, Point2) {
        let pts = self.cloud.points();
        let mut lo = pts[0];
        let mut hi = pts[0];
        for p in pts {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

/// Free-function form of [`PointMap::build`].
pub fn build_index(points: PointCloud2) -> Result<PointMap> {
    PointMap::build(points)
}
