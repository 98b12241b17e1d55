//! End-to-end per-frame orchestration: background modeling, detection,
//! tracking, zone dwell and interaction classification over a depth stream.

use std::time::Instant;

use crate::background::{init_background, subtract, update_background, BackgroundModel};
use crate::config::PipelineConfig;
use crate::detection::{detect_people, extract_blobs, Blob, PersonDetection};
use crate::error::{Error, Result};
use crate::events::{InteractionEvent, VisitRecord};
use crate::frame::DepthFrame;
use crate::interaction::ZoneTracker;
use crate::tracking::{Track, Tracker};

/// Everything a processed stream produced.
#[derive(Debug)]
pub struct PipelineOutput {
    pub frames_processed: usize,
    /// Wall-clock throughput over the processing loop.
    pub fps: f64,
    pub visits: Vec<VisitRecord>,
    pub interactions: Vec<InteractionEvent>,
}

pub struct Pipeline {
    config: PipelineConfig,
    init_buffer: Vec<DepthFrame>,
    model: Option<BackgroundModel>,
    tracker: Tracker,
    zone_trackers: Vec<ZoneTracker>,
    visits: Vec<VisitRecord>,
    interactions: Vec<InteractionEvent>,
    frames_processed: usize,
    last_frame: Option<DepthFrame>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Self {
        let tracker = Tracker::new(config.trk.clone());
        let zone_trackers = config
            .zones
            .iter()
            .map(|z| ZoneTracker::new(z.clone()))
            .collect();
        Pipeline {
            config,
            init_buffer: Vec::new(),
            model: None,
            tracker,
            zone_trackers,
            visits: Vec::new(),
            interactions: Vec::new(),
            frames_processed: 0,
            last_frame: None,
        }
    }

    /// Feeds one frame. The first `bg.init_frames` frames only build the
    /// background model; detection starts afterwards.
    pub fn push(&mut self, frame: DepthFrame) -> Result<()> {
        self.frames_processed += 1;
        if self.model.is_none() {
            self.init_buffer.push(frame);
            if self.init_buffer.len() >= self.config.bg.init_frames {
                self.model = Some(init_background(
                    &self.init_buffer,
                    self.config.bg.threshold_mm,
                    self.config.bg.alpha,
                )?);
                self.init_buffer.clear();
            }
            return Ok(());
        }
        let model = self.model.as_mut().expect("model initialized");
        let now_ms = frame.timestamp_ms;

        let mask = subtract(model, &frame)?;
        let blobs = extract_blobs(&mask, &frame, self.config.det.min_blob_area)?;
        let people: Vec<PersonDetection> =
            detect_people(blobs, &frame, &self.config.camera, &self.config.det)
                .into_iter()
                .filter(|p| p.accepted(&self.config.det))
                .collect();

        let assoc = self.tracker.associate(&people, now_ms);
        let mut assigned: Vec<(u64, &Blob)> = Vec::new();
        for (di, det) in people.iter().enumerate() {
            if let Some(id) = assoc.track_for(di) {
                assigned.push((id, &det.blob));
            }
        }
        assigned.sort_by_key(|&(id, _)| id);

        // zone dwell bookkeeping
        for zone_tracker in &self.zone_trackers {
            let zone = &zone_tracker.zone;
            for &(id, blob) in &assigned {
                let inside = blob_overlaps_zone(blob, zone);
                let track = self.tracker.get_mut(id).expect("assigned track exists");
                if inside {
                    track.mark_in_zone(&zone.zone_id, now_ms);
                } else {
                    track.mark_out_of_zone(&zone.zone_id);
                }
            }
        }

        for zone_tracker in &mut self.zone_trackers {
            let events =
                zone_tracker.step(&assigned, &frame, &self.config.camera, &self.config.int)?;
            self.interactions.extend(events);
        }

        update_background(model, &frame, &mask)?;

        for track in self.tracker.prune(now_ms) {
            self.close_visit(track);
        }
        self.last_frame = Some(frame);
        Ok(())
    }

    fn close_visit(&mut self, track: Track) {
        let exit_ms = track.last_seen_ms;
        if exit_ms.saturating_sub(track.entry_ms) < self.config.min_visit_ms {
            return; // detector glitch, not a person visit
        }
        self.visits.push(VisitRecord {
            camera_id: self.config.camera.camera_id.clone(),
            track_id: track.id,
            entry_ms: track.entry_ms,
            exit_ms,
            zones: track.zone_intervals,
        });
    }

    /// Ends the stream: force-closes open interactions and tracks.
    pub fn finish(mut self, elapsed_secs: f64) -> Result<PipelineOutput> {
        let last_ms = self.last_frame.as_ref().map_or(0, |f| f.timestamp_ms);
        if let Some(final_frame) = self.last_frame.take() {
            for zone_tracker in &mut self.zone_trackers {
                let events =
                    zone_tracker.flush(&final_frame, &self.config.camera, &self.config.int)?;
                self.interactions.extend(events);
            }
        }
        let deadline = last_ms
            .saturating_add(self.config.trk.lost_timeout_ms)
            .saturating_add(1);
        for track in self.tracker.prune(deadline) {
            self.close_visit(track);
        }
        self.visits.sort_by_key(|v| v.track_id);
        self.interactions
            .sort_by(|a, b| (a.start_ms, a.track_id).cmp(&(b.start_ms, b.track_id)));
        let fps = if elapsed_secs > 0.0 {
            self.frames_processed as f64 / elapsed_secs
        } else {
            f64::INFINITY
        };
        Ok(PipelineOutput {
            frames_processed: self.frames_processed,
            fps,
            visits: self.visits,
            interactions: self.interactions,
        })
    }
}

fn blob_overlaps_zone(blob: &Blob, zone: &crate::interaction::ShelfZone) -> bool {
    let (u0, v0, u1, v1) = blob.bbox;
    let u_lo = u0.max(zone.x_sx);
    let u_hi = u1.min(zone.x_dx.saturating_sub(1));
    let v_hi = v1.min(zone.y_dist.saturating_sub(1));
    if u_lo > u_hi || v0 > v_hi {
        return false;
    }
    for v in v0..=v_hi {
        for u in u_lo..=u_hi {
            if blob.contains(u, v) {
                return true;
            }
        }
    }
    false
}

/// Runs the full pipeline over an in-order frame stream.
pub fn process_stream<I>(frames: I, config: PipelineConfig) -> Result<PipelineOutput>
where
    I: IntoIterator<Item = Result<DepthFrame>>,
{
    for zone in &config.zones {
        zone.validate(u32::MAX, u32::MAX, config.camera.camera_height_mm)?;
    }
    let mut pipeline = Pipeline::new(config);
    let started = Instant::now();
    let mut any = false;
    for frame in frames {
        pipeline.push(frame?)?;
        any = true;
    }
    if !any {
        return Err(Error::argument("stream contains no frames"));
    }
    let elapsed = started.elapsed().as_secs_f64();
    pipeline.finish(elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BackgroundParams;
    use crate::detection::DetectionParams;
    use crate::frame::CameraConfig;
    use crate::interaction::ShelfZone;

    fn test_config() -> PipelineConfig {
        PipelineConfig {
            camera: CameraConfig {
                camera_height_mm: 3000.0,
                fx: 300.0,
                fy: 400.0,
                cx: 160.0,
                cy: 120.0,
                camera_id: "cam1".into(),
            },
            bg: BackgroundParams {
                init_frames: 5,
                alpha: 0.05,
                threshold_mm: 120.0,
            },
            det: DetectionParams {
                min_blob_area: 50,
                ring_radius_px: 6,
                ..DetectionParams::default()
            },
            zones: vec![ShelfZone {
                zone_id: "z1".into(),
                x_sx: 10,
                x_dx: 310,
                y_dist: 60,
                shelf_plane_mm: 1200.0,
                cell_grid: (4, 1),
            }],
            min_visit_ms: 300,
            ..PipelineConfig::default()
        }
    }

    fn empty_frame(t_ms: u64) -> DepthFrame {
        DepthFrame::filled(320, 240, t_ms, 3000)
    }

    /// Paints a crude person: a disc at `depth` with a head spike.
    fn person_frame(t_ms: u64, center: (u32, u32)) -> DepthFrame {
        let mut frame = empty_frame(t_ms);
        let (cu, cv) = (center.0 as i64, center.1 as i64);
        for v in 0..240i64 {
            for u in 0..320i64 {
                let du = u - cu;
                let dv = v - cv;
                let r2 = du * du + dv * dv;
                if r2 <= 12 * 12 {
                    // shoulders at 1550 mm depth, head apex at 1250
                    frame.data[(v * 320 + u) as usize] =
                        if r2 <= 3 * 3 { 1250 } else { 1550 };
                }
            }
        }
        frame
    }

    #[test]
    fn empty_stream_is_an_error() {
        assert!(process_stream(std::iter::empty(), test_config()).is_err());
    }

    #[test]
    fn static_scene_produces_nothing() {
        let frames = (0..30u64).map(|i| Ok(empty_frame(i * 100)));
        let out = process_stream(frames, test_config()).unwrap();
        assert_eq!(out.frames_processed, 30);
        assert!(out.visits.is_empty());
        assert!(out.interactions.is_empty());
    }

    #[test]
    fn walking_person_yields_one_visit() {
        let mut frames: Vec<crate::Result<DepthFrame>> = Vec::new();
        for i in 0..10u64 {
            frames.push(Ok(empty_frame(i * 100)));
        }
        // person walks left to right across the middle of the image
        for i in 0..20u64 {
            let u = 60 + (i as u32) * 10;
            frames.push(Ok(person_frame(1000 + i * 100, (u, 150))));
        }
        for i in 0..20u64 {
            frames.push(Ok(empty_frame(3000 + i * 100)));
        }
        let out = process_stream(frames, test_config()).unwrap();
        assert_eq!(out.visits.len(), 1, "visits: {:?}", out.visits);
        let visit = &out.visits[0];
        assert_eq!(visit.entry_ms, 1000);
        assert_eq!(visit.exit_ms, 2900);
    }

    #[test]
    fn visit_shorter_than_min_is_dropped() {
        let mut frames: Vec<crate::Result<DepthFrame>> = Vec::new();
        for i in 0..10u64 {
            frames.push(Ok(empty_frame(i * 100)));
        }
        // appears for two frames only
        frames.push(Ok(person_frame(1000, (150, 150))));
        frames.push(Ok(person_frame(1100, (155, 150))));
        for i in 0..20u64 {
            frames.push(Ok(empty_frame(1200 + i * 100)));
        }
        let out = process_stream(frames, test_config()).unwrap();
        assert!(out.visits.is_empty());
    }
}
