//! Shelf-contact detection and Positive/Negative/Neutral classification.
//! Start and end of each interaction are compared as shelf-relative
//! depth-occupancy patches with the arm masked out.

use std::collections::HashMap;

use crate::detection::{pixel_to_world, Blob};
use crate::error::{Error, Result};
use crate::events::{ContactPoint, InteractionEvent, InteractionKind};
use crate::frame::{CameraConfig, DepthFrame};

/// Image-space band adjacent to the shelf: u in [x_sx, x_dx), v in
/// [0, y_dist), partitioned into a product cell grid.
#[derive(Debug, Clone)]
pub struct ShelfZone {
    pub zone_id: String,
    pub x_sx: u32,
    pub x_dx: u32,
    pub y_dist: u32,
    /// Shelf top surface height above the floor, millimeters.
    pub shelf_plane_mm: f64,
    /// (cols, rows).
    pub cell_grid: (u32, u32),
}

impl ShelfZone {
    pub fn validate(&self, width: u32, height: u32, camera_height_mm: f64) -> Result<()> {
        if self.x_sx >= self.x_dx || self.x_dx > width {
            return Err(Error::argument(format!(
                "zone {}: require x_sx < x_dx <= image width",
                self.zone_id
            )));
        }
        if self.y_dist == 0 || self.y_dist > height {
            return Err(Error::argument(format!(
                "zone {}: require 0 < y_dist <= image height",
                self.zone_id
            )));
        }
        if self.shelf_plane_mm <= 0.0 || self.shelf_plane_mm >= camera_height_mm {
            return Err(Error::argument(format!(
                "zone {}: shelf plane must lie between floor and camera",
                self.zone_id
            )));
        }
        if self.cell_grid.0 == 0 || self.cell_grid.1 == 0 {
            return Err(Error::argument(format!(
                "zone {}: cell grid must be non-empty",
                self.zone_id
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn contains_px(&self, u: u32, v: u32) -> bool {
        u >= self.x_sx && u < self.x_dx && v < self.y_dist
    }

    /// (col, row) of the cell covering an in-zone pixel.
    pub fn cell_of(&self, u: u32, v: u32) -> (u32, u32) {
        let col = ((u - self.x_sx) as u64 * self.cell_grid.0 as u64
            / (self.x_dx - self.x_sx) as u64) as u32;
        let row = (v as u64 * self.cell_grid.1 as u64 / self.y_dist as u64) as u32;
        (col.min(self.cell_grid.0 - 1), row.min(self.cell_grid.1 - 1))
    }
}

#[derive(Debug, Clone)]
pub struct InteractionParams {
    /// Side length of the comparison patch, pixels.
    pub patch_px: u32,
    /// Similarity at or above which the interaction is Neutral.
    pub sim_threshold: f64,
    /// Occupancy-area tolerance, fraction of the patch area.
    pub area_tol: f64,
    /// Contact-loss frames before an interaction closes.
    pub debounce_frames: u32,
    /// Material must rise this far above the shelf plane to count as
    /// occupancy; absorbs sensor noise on the bare shelf surface.
    pub occ_margin_mm: f64,
}

impl Default for InteractionParams {
    fn default() -> Self {
        InteractionParams {
            patch_px: 64,
            sim_threshold: 0.90,
            area_tol: 0.05,
            debounce_frames: 3,
            occ_margin_mm: 20.0,
        }
    }
}

/// Hand-shelf contact candidate.
#[derive(Debug, Clone, Copy)]
pub struct Contact {
    pub u: u32,
    pub v: u32,
    pub depth_mm: u16,
    pub world: ContactPoint,
    pub cell: (u32, u32),
}

/// Deepest-penetrating blob pixel inside the zone whose world height
/// exceeds the shelf plane: smallest v, ties by depth then u.
pub fn detect_contact(
    blob: &Blob,
    frame: &DepthFrame,
    zone: &ShelfZone,
    config: &CameraConfig,
) -> Option<Contact> {
    let (bu0, bv0, bu1, bv1) = blob.bbox;
    let u_lo = bu0.max(zone.x_sx);
    let u_hi = bu1.min(zone.x_dx.saturating_sub(1));
    let v_hi = bv1.min(zone.y_dist.saturating_sub(1));
    if u_lo > u_hi || bv0 > v_hi {
        return None;
    }
    let depth_limit = config.camera_height_mm - zone.shelf_plane_mm;
    for v in bv0..=v_hi {
        let mut best: Option<(u16, u32)> = None;
        for u in u_lo..=u_hi {
            if !blob.contains(u, v) {
                continue;
            }
            let d = frame.depth_at(u, v);
            if d == 0 || d as f64 >= depth_limit {
                continue;
            }
            if best.map_or(true, |b| (d, u) < b) {
                best = Some((d, u));
            }
        }
        if let Some((d, u)) = best {
            let (x, y, z) = pixel_to_world(u as f64, v as f64, d as f64, config);
            return Some(Contact {
                u,
                v,
                depth_mm: d,
                world: ContactPoint { x, y, z },
                cell: zone.cell_of(u, v),
            });
        }
    }
    None
}

/// Shelf-relative occupancy patch captured at interaction start or end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub size: u32,
    /// 1 where depth indicates material above the shelf plane.
    pub occ: Vec<u8>,
    /// Pixels covered by the interacting blob (the arm), to be excluded
    /// from comparison.
    pub blob_mask: Vec<bool>,
    /// Reserved for an RGB/IR intensity channel; unused by classification.
    pub intensity: Option<Vec<u16>>,
}

/// Captures a `patch_px` square centered at the contact, zero-padded at
/// image borders.
pub fn capture_patch(
    frame: &DepthFrame,
    center: (u32, u32),
    zone: &ShelfZone,
    config: &CameraConfig,
    params: &InteractionParams,
    blob: Option<&Blob>,
) -> Patch {
    let size = params.patch_px;
    let half = size as i64 / 2;
    let occ_limit = config.camera_height_mm - zone.shelf_plane_mm - params.occ_margin_mm;
    let mut occ = vec![0u8; (size * size) as usize];
    let mut blob_mask = vec![false; (size * size) as usize];
    for pv in 0..size as i64 {
        for pu in 0..size as i64 {
            let u = center.0 as i64 + pu - half;
            let v = center.1 as i64 + pv - half;
            if u < 0 || v < 0 || u >= frame.width as i64 || v >= frame.height as i64 {
                continue;
            }
            let (u, v) = (u as u32, v as u32);
            let i = (pv * size as i64 + pu) as usize;
            let d = frame.depth_at(u, v);
            if d != 0 && (d as f64) < occ_limit {
                occ[i] = 1;
            }
            if let Some(b) = blob {
                if b.contains(u, v) {
                    blob_mask[i] = true;
                }
            }
        }
    }
    Patch {
        size,
        occ,
        blob_mask,
        intensity: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionStatus {
    Open,
    Closed,
}

/// One in-progress shelf contact.
#[derive(Debug, Clone)]
pub struct InteractionState {
    pub track_id: u64,
    pub zone_id: String,
    pub start_ms: u64,
    pub start_patch: Patch,
    pub contact_px: (u32, u32),
    pub contact_world: ContactPoint,
    pub cell: (u32, u32),
    pub status: InteractionStatus,
    /// Consecutive frames without contact.
    pub miss_frames: u32,
}

/// Builds the open state for a fresh contact.
pub fn open_interaction(
    track_id: u64,
    contact: &Contact,
    frame: &DepthFrame,
    zone: &ShelfZone,
    config: &CameraConfig,
    params: &InteractionParams,
    blob: &Blob,
) -> InteractionState {
    let start_patch = capture_patch(frame, (contact.u, contact.v), zone, config, params, Some(blob));
    InteractionState {
        track_id,
        zone_id: zone.zone_id.clone(),
        start_ms: frame.timestamp_ms,
        start_patch,
        contact_px: (contact.u, contact.v),
        contact_world: contact.world,
        cell: contact.cell,
        status: InteractionStatus::Open,
    miss_frames: 0,
    }
}

/// Pearson correlation of the two occupancy patches over the non-arm
/// region. Degenerate (zero-variance) regions compare by equality.
pub fn patch_similarity(start: &Patch, end: &Patch) -> f64 {
    if start.occ == end.occ {
        return 1.0;
    }
    let mut n = 0f64;
    let mut sx = 0f64;
    let mut sy = 0f64;
    let mut sxx = 0f64;
    let mut syy = 0f64;
    let mut sxy = 0f64;
    let mut region_equal = true;
    for i in 0..start.occ.len() {
        if start.blob_mask[i] || end.blob_mask[i] {
            continue;
        }
        let x = start.occ[i] as f64;
        let y = end.occ[i] as f64;
        if start.occ[i] != end.occ[i] {
            region_equal = false;
        }
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    if n == 0.0 {
        return 1.0;
    }
    let var_x = sxx - sx * sx / n;
    let var_y = syy - sy * sy / n;
    if var_x <= 0.0 || var_y <= 0.0 {
        return if region_equal { 1.0 } else { 0.0 };
    }
    let cov = sxy - sx * sy / n;
    cov / (var_x * var_y).sqrt()
}

fn region_area(patch: &Patch, other: &Patch) -> usize {
    patch
        .occ
        .iter()
        .enumerate()
        .filter(|&(i, &o)| o == 1 && !patch.blob_mask[i] && !other.blob_mask[i])
        .count()
}

/// Closes an open interaction against the end frame and classifies it.
pub fn close_and_classify(
    state: &mut InteractionState,
    end_frame: &DepthFrame,
    end_blob: Option<&Blob>,
    end_ms: u64,
    zone: &ShelfZone,
    config: &CameraConfig,
    params: &InteractionParams,
) -> Result<InteractionEvent> {
    if state.status != InteractionStatus::Open {
        return Err(Error::State(format!(
            "interaction for track {} already closed",
            state.track_id
        )));
    }
    state.status = InteractionStatus::Closed;
    let end_patch = capture_patch(end_frame, state.contact_px, zone, config, params, end_blob);
    let similarity = patch_similarity(&state.start_patch, &end_patch);
    let kind = if similarity >= params.sim_threshold {
        InteractionKind::Neutral
    } else {
        let start_area = region_area(&state.start_patch, &end_patch) as f64;
        let end_area = region_area(&end_patch, &state.start_patch) as f64;
        let tol = params.area_tol * (params.patch_px * params.patch_px) as f64;
        if end_area < start_area - tol {
            InteractionKind::Positive
        } else {
            InteractionKind::Negative
        }
    };
    Ok(InteractionEvent {
        camera_id: config.camera_id.clone(),
        zone_id: state.zone_id.clone(),
        track_id: state.track_id,
        kind,
        start_ms: state.start_ms,
        end_ms: end_ms.max(state.start_ms),
        contact: state.contact_world,
        cell: state.cell,
    })
}

/// Per-zone interaction lifecycle: opens on contact, closes after a
/// debounced loss of contact, at most one open interaction per track.
#[derive(Debug)]
pub struct ZoneTracker {
    pub zone: ShelfZone,
    open: HashMap<u64, InteractionState>,
}

impl ZoneTracker {
    pub fn new(zone: ShelfZone) -> Self {
        ZoneTracker {
            zone,
            open: HashMap::new(),
        }
    }

    pub fn open_states(&self) -> impl Iterator<Item = &InteractionState> {
        self.open.values()
    }

    /// Advances one frame. `assigned` pairs each tracked person with its
    /// blob in this frame.
    pub fn step(
        &mut self,
        assigned: &[(u64, &Blob)],
        frame: &DepthFrame,
        config: &CameraConfig,
        params: &InteractionParams,
    ) -> Result<Vec<InteractionEvent>> {
        let now_ms = frame.timestamp_ms;
        let mut events = Vec::new();
        let mut seen: Vec<u64> = Vec::new();
        let mut sorted: Vec<&(u64, &Blob)> = assigned.iter().collect();
        sorted.sort_by_key(|(id, _)| *id);
        for &&(track_id, blob) in &sorted {
            seen.push(track_id);
            match detect_contact(blob, frame, &self.zone, config) {
                Some(contact) => {
                    if let Some(state) = self.open.get_mut(&track_id) {
                        state.miss_frames = 0;
                    } else {
                        let state = open_interaction(
                            track_id, &contact, frame, &self.zone, config, params, blob,
                        );
                        self.open.insert(track_id, state);
                    }
                }
                None => {
                    if let Some(state) = self.open.get_mut(&track_id) {
                        state.miss_frames += 1;
                        if state.miss_frames >= params.debounce_frames {
                            let mut state = self.open.remove(&track_id).unwrap();
                            events.push(close_and_classify(
                                &mut state,
                                frame,
                                Some(blob),
                                now_ms,
                                &self.zone,
                                config,
                                params,
                            )?);
                        }
                    }
                }
            }
        }
        // tracks that vanished entirely
        let gone: Vec<u64> = self
            .open
            .keys()
            .filter(|id| !seen.contains(id))
            .copied()
            .collect();
        for track_id in gone {
            let state = self.open.get_mut(&track_id).unwrap();
            state.miss_frames += 1;
            if state.miss_frames >= params.debounce_frames {
                let mut state = self.open.remove(&track_id).unwrap();
                events.push(close_and_classify(
                    &mut state, frame, None, now_ms, &self.zone, config, params,
                )?);
            }
        }
        events.sort_by_key(|e| e.track_id);
        Ok(events)
    }

    /// Force-closes every open interaction (end of stream).
    pub fn flush(
        &mut self,
        frame: &DepthFrame,
        config: &CameraConfig,
        params: &InteractionParams,
    ) -> Result<Vec<InteractionEvent>> {
        let mut events = Vec::new();
        let mut ids: Vec<u64> = self.open.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            let mut state = self.open.remove(&id).unwrap();
            events.push(close_and_classify(
                &mut state,
                frame,
                None,
                frame.timestamp_ms,
                &self.zone,
                config,
                params,
            )?);
        }
        Ok(events)
    }
}
