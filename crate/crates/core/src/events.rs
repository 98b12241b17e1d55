//! Event records shared by the interaction, analytics and heatmap stages.

use serde::{Deserialize, Serialize};

/// The three shelf-contact outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    /// Product picked up from the shelf.
    Positive,
    /// Product taken and put back (possibly displaced).
    Negative,
    /// Hand crossed the shelf threshold without taking anything.
    Neutral,
}

impl InteractionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Positive => "positive",
            InteractionKind::Negative => "negative",
            InteractionKind::Neutral => "neutral",
        }
    }
}

/// 3-D contact point in camera-centered world coordinates, millimeters.
/// `z` is height above the floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// One classified shelf contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub camera_id: String,
    pub zone_id: String,
    pub track_id: u64,
    #[serde(rename = "type")]
    pub kind: InteractionKind,
    pub start_ms: u64,
    pub end_ms: u64,
    pub contact: ContactPoint,
    /// (col, row) product cell within the zone grid.
    pub cell: (u32, u32),
}

/// Dwell interval of one visit inside one zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDwell {
    pub zone_id: String,
    pub enter_ms: u64,
    pub exit_ms: u64,
}

/// One closed visit: a person tracked from entry to exit under one camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub camera_id: String,
    pub track_id: u64,
    pub entry_ms: u64,
    pub exit_ms: u64,
    pub zones: Vec<ZoneDwell>,
}
