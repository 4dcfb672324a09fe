//! Monte Carlo localization of a planar robot on a prior point map from
//! radar-derived range scans.
//!
//! Scans arrive either as raster images ([`scan::RangeImage`]) or as metric
//! point clouds. Frame-to-frame ICP ([`icp`]) provides the motion input to a
//! particle filter ([`mcl`]) whose importance weight is a power of the number
//! of scan points lying within a threshold distance of the map ([`map`]).

pub mod error;
pub mod eval;
pub mod geometry;
pub mod icp;
pub mod io;
pub mod map;
pub mod mcl;
pub mod scan;
pub mod sim;
pub mod surrogate;

pub use error::{Error, Result};
pub use geometry::{wrap_angle, Point2, PointCloud2, Pose2};
pub use map::PointMap;
