//! Top-view depth-camera shopper analytics: people detection and tracking,
//! shelf interaction classification, behavior indicators and interaction
//! maps over a planogram.

pub mod analytics;
pub mod background;
pub mod config;
pub mod detection;
pub mod error;
pub mod events;
pub mod frame;
pub mod heatmap;
pub mod interaction;
pub mod netpbm;
pub mod pipeline;
pub mod sequence;
pub mod sim;
pub mod tracking;

pub use error::{Error, Result};
pub use frame::{CameraConfig, DepthFrame, MAX_DEPTH_MM};
