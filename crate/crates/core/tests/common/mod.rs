//! Shared scenario builders for the integration suites. All scenarios use a
//! 320x240 camera so full runs stay fast; the geometry scales the default
//! 640x480 intrinsics by one half.

#![allow(dead_code)]

use shelfwatch::config::{BackgroundParams, PipelineConfig};
use shelfwatch::detection::DetectionParams;
use shelfwatch::events::InteractionKind;
use shelfwatch::frame::CameraConfig;
use shelfwatch::interaction::{InteractionParams, ShelfZone};
use shelfwatch::sim::{PersonShape, Reach, Scenario, ScriptedPerson, SimShelf, Waypoint};
use shelfwatch::tracking::TrackerParams;

pub const WIDTH: u32 = 320;
pub const HEIGHT: u32 = 240;
pub const CAM_HEIGHT_MM: f64 = 3000.0;
pub const FLOOR_DEPTH_MM: u16 = 3000;
pub const FRAME_PERIOD_MS: u64 = 100;
/// Walking lane: keeps the body blob fully inside the image and out of the
/// shelf zone for heights up to ~1850 mm.
pub const LANE_Y_MM: f64 = 90.0;

pub fn camera(id: &str) -> CameraConfig {
    CameraConfig {
        camera_height_mm: CAM_HEIGHT_MM,
        fx: 300.0,
        fy: 400.0,
        cx: 160.0,
        cy: 120.0,
        camera_id: id.into(),
    }
}

pub fn sim_shelf() -> SimShelf {
    SimShelf {
        zone_id: "z1".into(),
        x_sx: 10,
        x_dx: 310,
        y_dist: 60,
        shelf_plane_mm: 1200.0,
        grid_cols: 4,
        grid_rows: 1,
        product_half_px: 12,
        product_raise_mm: 40.0,
        negative_offset_px: (12, 0),
        contact_above_mm: 150.0,
        arm_half_px: 4.0,
        stocked: None,
    }
}

pub fn shelf_zone() -> ShelfZone {
    let s = sim_shelf();
    ShelfZone {
        zone_id: s.zone_id,
        x_sx: s.x_sx,
        x_dx: s.x_dx,
        y_dist: s.y_dist,
        shelf_plane_mm: s.shelf_plane_mm,
        cell_grid: (s.grid_cols, s.grid_rows),
    }
}

pub fn person_shape() -> PersonShape {
    PersonShape {
        head_radius_px: 7.0,
        ..PersonShape::default()
    }
}

pub fn pipeline_config(camera_id: &str) -> PipelineConfig {
    PipelineConfig {
        camera: camera(camera_id),
        bg: BackgroundParams {
            init_frames: 10,
            alpha: 0.05,
            threshold_mm: 80.0,
        },
        det: DetectionParams {
            min_blob_area: 100,
            jump_mm: 150.0,
            ring_radius_px: 6,
            height_min_mm: 800.0,
            height_max_mm: 2200.0,
        },
        trk: TrackerParams {
            max_disp_px_per_frame: 40.0,
            height_gate_mm: 100.0,
            lost_timeout_ms: 1500,
        },
        min_visit_ms: 300,
        int: InteractionParams {
            patch_px: 64,
            sim_threshold: 0.80,
            area_tol: 0.05,
            debounce_frames: 3,
            occ_margin_mm: 20.0,
        },
        zones: vec![shelf_zone()],
        catalog: Default::default(),
        map: None,
    }
}

/// Config-file text equivalent to [`pipeline_config`], for CLI invocations.
pub fn config_text(camera_id: &str) -> String {
    format!(
        "\
cam.height_mm = 3000
cam.fx = 300
cam.fy = 400
cam.cx = 160
cam.cy = 120
cam.id = {camera_id}
bg.init_frames = 10
bg.alpha = 0.05
bg.threshold_mm = 80
det.min_blob_area = 100
det.jump_mm = 150
det.ring_radius_px = 6
trk.max_disp_px = 40
trk.min_visit_ms = 300
int.sim_threshold = 0.80
zone.z1.x_sx = 10
zone.z1.x_dx = 310
zone.z1.y_dist = 60
zone.z1.shelf_plane_mm = 1200
zone.z1.grid_cols = 4
zone.z1.grid_rows = 1
zone.z1.cells = 0,0:bleach:cleaning;1,0:soap:cleaning;2,0:pasta:food;3,0:rice:food
map.zone_id = z1
map.rect_px = [0,0,200,120]
map.marker_radius_px = 5
"
    )
}

pub fn empty_scenario(seed: u64, duration_ms: u64) -> Scenario {
    Scenario {
        width: WIDTH,
        height: HEIGHT,
        duration_ms,
        frame_period_ms: FRAME_PERIOD_MS,
        floor_depth_mm: FLOOR_DEPTH_MM,
        noise_stddev_mm: 8.0,
        seed,
        camera: camera("cam1"),
        persons: Vec::new(),
        props: Vec::new(),
        shelf: Some(sim_shelf()),
        person_shape: Some(person_shape()),
    }
}

/// World x that puts the person's head directly under pixel column `u`.
pub fn x_for_pixel(u: u32, height_mm: f64) -> f64 {
    let apex = CAM_HEIGHT_MM - height_mm;
    (u as f64 - 160.0) * apex / 300.0
}

pub fn wp(t_ms: u64, x_mm: f64, y_mm: f64) -> Waypoint {
    Waypoint { t_ms, x_mm, y_mm }
}

/// One shopper who stops under each listed cell in turn and performs a
/// scripted reach there. First frames (t < 1000 ms) stay empty for
/// background initialization.
pub fn reach_scenario(seed: u64, height_mm: f64, reaches: &[(u32, InteractionKind)]) -> Scenario {
    let shelf = sim_shelf();
    let mut scenario = empty_scenario(seed, 0);
    let mut waypoints = Vec::new();
    let mut reach_list = Vec::new();
    let mut t = 1100u64;
    for (i, &(cell_col, kind)) in reaches.iter().enumerate() {
        let (cu, _) = shelf.cell_center_px((cell_col, 0));
        let x = x_for_pixel(cu, height_mm);
        if i == 0 {
            waypoints.push(wp(t, x, LANE_Y_MM));
        } else {
            // 600 ms walk from the previous stop
            t += 600;
            waypoints.push(wp(t, x, LANE_Y_MM));
        }
        // settle, reach for 1 s, settle again
        let reach_start = t + 500;
        let reach_end = reach_start + 1000;
        reach_list.push(Reach {
            start_ms: reach_start,
            end_ms: reach_end,
            cell: (cell_col, 0),
            kind,
        });
        t = reach_end + 400;
        waypoints.push(wp(t, x, LANE_Y_MM));
    }
    scenario.duration_ms = t + 2000;
    scenario.persons.push(ScriptedPerson {
        id: 1,
        height_mm,
        waypoints,
        reaches: reach_list,
    });
    scenario
}

/// `n` shoppers crossing the floor one after another (non-overlapping in
/// time and space), for the counting suite.
pub fn walkers_scenario(seed: u64, n: u32) -> Scenario {
    let mut scenario = empty_scenario(seed, 0);
    scenario.shelf = None;
    let mut t = 1100u64;
    for i in 0..n {
        let height = 1600.0 + 60.0 * i as f64;
        let x0 = x_for_pixel(15, height);
        let x1 = x_for_pixel(305, height);
        scenario.persons.push(ScriptedPerson {
            id: i + 1,
            height_mm: height,
            waypoints: vec![wp(t, x0, LANE_Y_MM), wp(t + 2000, x1, LANE_Y_MM)],
            reaches: Vec::new(),
        });
        t += 2000 + 500;
    }
    scenario.duration_ms = t + 2000;
    scenario
}
