use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest depth value (exclusive) considered valid, in millimeters.
pub const MAX_DEPTH_MM: u16 = 10_000;

/// One top-view depth image. Pixel values are millimeters from the sensor;
/// 0 marks an invalid pixel (no return).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    pub width: u32,
    pub height: u32,
    pub timestamp_ms: u64,
    /// Row-major, `width * height` samples.
    pub data: Vec<u16>,
}

impl DepthFrame {
    pub fn new(width: u32, height: u32, timestamp_ms: u64, data: Vec<u16>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::argument(format!(
                "frame data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(DepthFrame {
            width,
            height,
            timestamp_ms,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, timestamp_ms: u64, depth_mm: u16) -> Self {
        DepthFrame {
            width,
            height,
            timestamp_ms,
            data: vec![depth_mm; (width as usize) * (height as usize)],
        }
    }

    #[inline]
    pub fn idx(&self, u: u32, v: u32) -> usize {
        (v as usize) * (self.width as usize) + u as usize
    }

    #[inline]
    pub fn depth_at(&self, u: u32, v: u32) -> u16 {
        self.data[self.idx(u, v)]
    }

    #[inline]
    pub fn is_valid(&self, u: u32, v: u32) -> bool {
        self.depth_at(u, v) != 0
    }
}

/// Pinhole intrinsics plus mounting height of a single top-view sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    /// Floor-to-sensor distance in millimeters.
    pub camera_height_mm: f64,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub camera_id: String,
}

impl CameraConfig {
    pub fn validate(&self, width: u32, height: u32) -> Result<()> {
        if self.camera_height_mm <= 0.0 {
            return Err(Error::argument("camera_height_mm must be positive"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::argument("focal lengths must be positive"));
        }
        if self.cx < 0.0 || self.cx >= width as f64 || self.cy < 0.0 || self.cy >= height as f64 {
            return Err(Error::argument(
                "principal point must lie inside the image",
            ));
        }
        Ok(())
    }

    /// Project a world point on the optical axis frame (x right, y down,
    /// z up from the floor) to pixel coordinates at the given depth.
    pub fn project(&self, x_mm: f64, y_mm: f64, depth_mm: f64) -> (f64, f64) {
        (
            self.cx + self.fx * x_mm / depth_mm,
            self.cy + self.fy * y_mm / depth_mm,
        )
    }
}
