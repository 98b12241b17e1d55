//! Dynamic per-pixel background depth model and foreground segmentation.
//! Objects under a top-view camera are always nearer than the background,
//! so subtraction is one-sided.

use crate::error::{Error, Result};
use crate::frame::DepthFrame;

#[derive(Debug, Clone)]
pub struct BackgroundModel {
    pub width: u32,
    pub height: u32,
    /// Reference depth per pixel, millimeters. 0 = never observed.
    pub ref_depth: Vec<f64>,
    /// Exponential update rate, (0, 1).
    pub alpha: f64,
    /// Segmentation threshold, millimeters.
    pub threshold_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl ForegroundMask {
    #[inline]
    pub fn get(&self, u: u32, v: u32) -> bool {
        self.bits[(v * self.width + u) as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Builds the model from startup frames: per-pixel median of valid samples.
/// Pixels invalid in every frame get reference 0 and never segment.
pub fn init_background(frames: &[DepthFrame], threshold_mm: f64, alpha: f64) -> Result<BackgroundModel> {
    let first = frames
        .first()
        .ok_or_else(|| Error::argument("init_background needs at least one frame"))?;
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::argument("alpha must lie in (0, 1)"));
    }
    if threshold_mm <= 0.0 {
        return Err(Error::argument("threshold_mm must be positive"));
    }
    for f in frames {
        if f.width != first.width || f.height != first.height {
            return Err(Error::argument("init frames must share dimensions"));
        }
    }
    let n = (first.width as usize) * (first.height as usize);
    let mut ref_depth = vec![0f64; n];
    let mut samples: Vec<u16> = Vec::with_capacity(frames.len());
    for i in 0..n {
        samples.clear();
        for f in frames {
            let d = f.data[i];
            if d != 0 {
                samples.push(d);
            }
        }
        if samples.is_empty() {
            continue;
        }
        samples.sort_unstable();
        let m = samples.len();
        ref_depth[i] = if m % 2 == 1 {
            samples[m / 2] as f64
        } else {
            (samples[m / 2 - 1] as f64 + samples[m / 2] as f64) / 2.0
        };
    }
    Ok(BackgroundModel {
        width: first.width,
        height: first.height,
        ref_depth,
        alpha,
        threshold_mm,
    })
}

/// Foreground = valid pixel nearer than the reference by more than the
/// threshold. Invalid pixels are background.
pub fn subtract(model: &BackgroundModel, frame: &DepthFrame) -> Result<ForegroundMask> {
    if frame.width != model.width || frame.height != model.height {
        return Err(Error::argument("frame dimensions do not match model"));
    }
    let bits = frame
        .data
        .iter()
        .zip(model.ref_depth.iter())
        .map(|(&d, &r)| d != 0 && r - (d as f64) > model.threshold_mm)
        .collect();
    Ok(ForegroundMask {
        width: model.width,
        height: model.height,
        bits,
    })
}

/// Blends background-classified valid pixels into the reference; foreground
/// and invalid pixels leave the model untouched.
pub fn update_background(model: &mut BackgroundModel, frame: &DepthFrame, mask: &ForegroundMask) -> Result<()> {
    if frame.width != model.width
        || frame.height != model.height
        || mask.width != model.width
        || mask.height != model.height
    {
        return Err(Error::argument("dimensions do not match model"));
    }
    let alpha = model.alpha;
    for ((r, &d), &fg) in model
        .ref_depth
        .iter_mut()
        .zip(frame.data.iter())
        .zip(mask.bits.iter())
    {
        if !fg && d != 0 {
            *r = (1.0 - alpha) * *r + alpha * d as f64;
        }
    }
    Ok(())
}
