//! Raster scan images and their metric point-cloud form.
//!
//! Pixel `(row, col)` of a `size × size` image with resolution `r` m/px maps
//! to the metric pixel center
//! `((col − size/2 + 0.5)·r, (size/2 − row − 0.5)·r)`: y up, sensor at the
//! image center.

use crate::error::{invalid, Result};
use crate::geometry::{Point2, PointCloud2, SENSOR_FRAME};

/// Default raster edge length in pixels.
pub const DEFAULT_IMAGE_SIZE: usize = 512;
/// Default raster resolution in meters per pixel.
pub const DEFAULT_RESOLUTION: f64 = 0.25;
/// Default intensity threshold when binarizing generator output.
pub const DEFAULT_THRESHOLD: u8 = 128;

/// Square, sensor-centered, single-channel 8-bit raster.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeImage {
    size: usize,
    resolution: f64,
    pixels: Vec<u8>,
}

impl RangeImage {
    /// `pixels` is row-major and must hold `size * size` values.
    pub fn new(size: usize, resolution: f64, pixels: Vec<u8>) -> Result<Self> {
        if size == 0 {
            return Err(invalid("image size must be positive"));
        }
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(invalid(format!("resolution must be > 0, got {resolution}")));
        }
        if pixels.len() != size * size {
            return Err(invalid(format!(
                "expected {} pixels for a {size}x{size} image, got {}",
                size * size,
                pixels.len()
            )));
        }
        Ok(Self {
            size,
            resolution,
            pixels,
        })
    }

    pub fn zeros(size: usize, resolution: f64) -> Result<Self> {
        Self::new(size, resolution, vec![0; size * size])
    }

    pub fn width(&self) -> usize {
        self.size
    }

    pub fn height(&self) -> usize {
        self.size
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.size + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.size + col] = value;
    }

    /// Half the metric field of view.
    pub fn half_extent(&self) -> f64 {
        self.size as f64 * self.resolution / 2.0
    }

    /// Metric center of pixel `(row, col)`.
    pub fn pixel_center(&self, row: usize, col: usize) -> Point2 {
        let half = self.size as f64 / 2.0;
        Point2::new(
            (col as f64 - half + 0.5) * self.resolution,
            (half - row as f64 - 0.5) * self.resolution,
        )
    }

    /// Pixel containing metric point `p`, if inside the raster.
    pub fn pixel_of(&self, p: &Point2) -> Option<(usize, usize)> {
        let half = self.size as f64 / 2.0;
        let col = (p.x / self.resolution + half).floor();
        let row = (half - p.y / self.resolution).floor();
        let n = self.size as f64;
        if col >= 0.0 && col < n && row >= 0.0 && row < n {
            Some((row as usize, col as usize))
        } else {
            None
        }
    }
}

/// One point per pixel with intensity `>= threshold`, emitted row-major.
pub fn image_to_cloud(img: &RangeImage, threshold: u8) -> PointCloud2 {
    let points = img
        .pixels
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v >= threshold)
        .map(|(i, _)| img.pixel_center(i / img.size, i % img.size))
        .collect();
    PointCloud2::from_finite(points, SENSOR_FRAME)
}

/// Rasterizes `cloud`: every in-bounds point saturates its pixel to 255.
/// Points outside the field are dropped.
pub fn cloud_to_image(cloud: &PointCloud2, size: usize, resolution: f64) -> Result<RangeImage> {
    if !size.is_multiple_of(2) {
        return Err(invalid(format!("image size must be even, got {size}")));
    }
    let mut img = RangeImage::zeros(size, resolution)?;
    for p in cloud.points() {
        if let Some((row, col)) = img.pixel_of(p) {
            img.set(row, col, 255);
        }
    }
    Ok(img)
}

/// Keeps the points with `‖p‖ <= max_range`, in order.
pub fn range_filter(cloud: &PointCloud2, max_range: f64) -> PointCloud2 {
    let points = cloud
        .points()
        .iter()
        .copied()
        .filter(|p| p.norm() <= max_range)
        .collect();
    PointCloud2::from_finite(points, cloud.frame())
}
