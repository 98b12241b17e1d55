//! Frame-to-frame identity: greedy nearest-neighbor association gated by
//! head displacement and body height, with unique never-reused IDs.

use std::collections::HashMap;

use crate::detection::PersonDetection;
use crate::events::ZoneDwell;

#[derive(Debug, Clone)]
pub struct TrackerParams {
    pub max_disp_px_per_frame: f64,
    pub height_gate_mm: f64,
    pub lost_timeout_ms: u64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            max_disp_px_per_frame: 60.0,
            height_gate_mm: 100.0,
            lost_timeout_ms: 1500,
        }
    }
}

/// Height smoothing weight for new observations.
const HEIGHT_EMA: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackState {
    Active,
    Lost,
}

#[derive(Debug, Clone, Copy)]
pub struct HeadObs {
    pub timestamp_ms: u64,
    pub u: u32,
    pub v: u32,
    pub depth_mm: u16,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub head_history: Vec<HeadObs>,
    /// Exponentially smoothed body height.
    pub height_mm: f64,
    pub state: TrackState,
    pub last_seen_ms: u64,
    pub entry_ms: u64,
    pub zone_intervals: Vec<ZoneDwell>,
    /// Open interval index per zone, while the track is inside it.
    open_zones: HashMap<String, usize>,
}

impl Track {
    pub fn last_head(&self) -> HeadObs {
        *self.head_history.last().expect("track has history")
    }

    /// Extends or opens the dwell interval for `zone_id` at time `now`.
    pub fn mark_in_zone(&mut self, zone_id: &str, now_ms: u64) {
        match self.open_zones.get(zone_id) {
            Some(&i) => self.zone_intervals[i].exit_ms = now_ms,
            None => {
                self.zone_intervals.push(ZoneDwell {
                    zone_id: zone_id.to_string(),
                    enter_ms: now_ms,
                    exit_ms: now_ms,
                });
                self.open_zones
                    .insert(zone_id.to_string(), self.zone_intervals.len() - 1);
            }
        }
    }

    pub fn mark_out_of_zone(&mut self, zone_id: &str) {
        self.open_zones.remove(zone_id);
    }
}

/// Result of associating one frame's detections.
#[derive(Debug, Clone, Default)]
pub struct Association {
    /// (track id, detection index) matched pairs.
    pub matched: Vec<(u64, usize)>,
    /// (track id, detection index) for newly spawned tracks.
    pub spawned: Vec<(u64, usize)>,
    /// IDs of active tracks that missed this frame.
    pub missed: Vec<u64>,
}

impl Association {
    /// Track id assigned to a detection index, if any.
    pub fn track_for(&self, det_idx: usize) -> Option<u64> {
        self.matched
            .iter()
            .chain(self.spawned.iter())
            .find(|&&(_, d)| d == det_idx)
            .map(|&(id, _)| id)
    }
}

#[derive(Debug)]
pub struct Tracker {
    next_id: u64,
    pub tracks: Vec<Track>,
    pub params: TrackerParams,
}

impl Tracker {
    pub fn new(params: TrackerParams) -> Self {
        Tracker {
            next_id: 1,
            tracks: Vec::new(),
            params,
        }
    }

    /// Greedy globally-nearest assignment: repeatedly takes the closest
    /// (track, detection) pair that passes both the displacement and the
    /// height gate. Unmatched detections spawn fresh IDs.
    pub fn associate(&mut self, detections: &[PersonDetection], now_ms: u64) -> Association {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, track) in self.tracks.iter().enumerate() {
            let head = track.last_head();
            for (di, det) in detections.iter().enumerate() {
                let (du, dv) = (
                    det.blob.head.0 as f64 - head.u as f64,
                    det.blob.head.1 as f64 - head.v as f64,
                );
                let dist = (du * du + dv * dv).sqrt();
                if dist <= self.params.max_disp_px_per_frame
                    && (det.height_mm - track.height_mm).abs() <= self.params.height_gate_mm
                {
                    pairs.push((dist, ti, di));
                }
            }
        }
        pairs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        let mut track_used = vec![false; self.tracks.len()];
        let mut det_used = vec![false; detections.len()];
        let mut outcome = Association::default();
        for (_, ti, di) in pairs {
            if track_used[ti] || det_used[di] {
                continue;
            }
            track_used[ti] = true;
            det_used[di] = true;
            let det = &detections[di];
            let track = &mut self.tracks[ti];
            track.head_history.push(HeadObs {
                timestamp_ms: now_ms,
                u: det.blob.head.0,
                v: det.blob.head.1,
                depth_mm: det.blob.head.2,
            });
            track.height_mm = (1.0 - HEIGHT_EMA) * track.height_mm + HEIGHT_EMA * det.height_mm;
            track.last_seen_ms = now_ms;
            track.state = TrackState::Active;
            outcome.matched.push((track.id, di));
        }
        for (ti, used) in track_used.iter().enumerate() {
            if !used {
                outcome.missed.push(self.tracks[ti].id);
            }
        }
        for (di, det) in detections.iter().enumerate() {
            if det_used[di] {
                continue;
            }
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track {
                id,
                head_history: vec![HeadObs {
                    timestamp_ms: now_ms,
                    u: det.blob.head.0,
                    v: det.blob.head.1,
                    depth_mm: det.blob.head.2,
                }],
                height_mm: det.height_mm,
                state: TrackState::Active,
                last_seen_ms: now_ms,
                entry_ms: now_ms,
                zone_intervals: Vec::new(),
                open_zones: HashMap::new(),
            });
            outcome.spawned.push((id, di));
        }
        outcome
    }

    /// Closes tracks unseen for longer than the lost timeout and returns
    /// them; their dwell intervals are final.
    pub fn prune(&mut self, now_ms: u64) -> Vec<Track> {
        let timeout = self.params.lost_timeout_ms;
        let mut closed = Vec::new();
        let mut alive = Vec::new();
        for mut track in self.tracks.drain(..) {
            if now_ms.saturating_sub(track.last_seen_ms) > timeout {
                track.state = TrackState::Lost;
                track.open_zones.clear();
                closed.push(track);
            } else {
                alive.push(track);
            }
        }
        self.tracks = alive;
        closed
    }

    pub fn get(&self, id: u64) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn get_mut(&mut self, id: u64) -> Option<&mut Track> {
        self.tracks.iter_mut().find(|t| t.id == id)
    }
}
