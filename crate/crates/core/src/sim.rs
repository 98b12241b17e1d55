//! Synthetic depth scene simulator. Renders scripted people, carts and a
//! stocked shelf into depth frames and emits the matching ground truth,
//! which serves as the oracle for every downstream stage.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::InteractionKind;
use crate::frame::{CameraConfig, DepthFrame};

/// Position sample along a scripted trajectory. Times are absolute
/// milliseconds from sequence start; positions are camera-centered floor
/// coordinates in millimeters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Waypoint {
    pub t_ms: u64,
    pub x_mm: f64,
    pub y_mm: f64,
}

/// Scripted shelf reach. The arm is rendered over `[start_ms, end_ms)`;
/// Positive/Negative reaches mutate the target cell's product patch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Reach {
    pub start_ms: u64,
    pub end_ms: u64,
    /// (col, row) target cell in the shelf grid.
    pub cell: (u32, u32),
    pub kind: InteractionKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptedPerson {
    pub id: u32,
    pub height_mm: f64,
    pub waypoints: Vec<Waypoint>,
    #[serde(default)]
    pub reaches: Vec<Reach>,
}

impl ScriptedPerson {
    /// Presence window: from the first to the last waypoint.
    pub fn presence(&self) -> (u64, u64) {
        (
            self.waypoints.first().map(|w| w.t_ms).unwrap_or(0),
            self.waypoints.last().map(|w| w.t_ms).unwrap_or(0),
        )
    }

    fn position_at(&self, t_ms: u64) -> Option<(f64, f64)> {
        let (entry, exit) = self.presence();
        if t_ms < entry || t_ms > exit {
            return None;
        }
        let mut prev = &self.waypoints[0];
        for wp in &self.waypoints[1..] {
            if t_ms <= wp.t_ms {
                let span = (wp.t_ms - prev.t_ms) as f64;
                let s = if span == 0.0 {
                    0.0
                } else {
                    (t_ms - prev.t_ms) as f64 / span
                };
                return Some((
                    prev.x_mm + s * (wp.x_mm - prev.x_mm),
                    prev.y_mm + s * (wp.y_mm - prev.y_mm),
                ));
            }
            prev = wp;
        }
        Some((prev.x_mm, prev.y_mm))
    }
}

/// Flat-topped box (e.g. a pushed cart): a blob with no head-shoulder jump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatProp {
    pub top_height_mm: f64,
    pub half_width_mm: f64,
    pub half_depth_mm: f64,
    pub waypoints: Vec<Waypoint>,
}

fn default_semi_axis_x() -> f64 {
    180.0
}
fn default_semi_axis_y() -> f64 {
    250.0
}
fn default_shoulder_drop() -> f64 {
    300.0
}
fn default_head_radius_px() -> f64 {
    14.0
}

/// Shape of the rendered person blob: an elliptical footprint with a
/// parabolic head spike. Depth at pixel radius r from the apex is
/// `apex + shoulder_drop * min(1, (r / head_radius_px)^2)`, so the
/// head-shoulder jump is fully developed at `head_radius_px`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PersonShape {
    #[serde(default = "default_semi_axis_x")]
    pub semi_axis_x_mm: f64,
    #[serde(default = "default_semi_axis_y")]
    pub semi_axis_y_mm: f64,
    #[serde(default = "default_shoulder_drop")]
    pub shoulder_drop_mm: f64,
    #[serde(default = "default_head_radius_px")]
    pub head_radius_px: f64,
}

impl Default for PersonShape {
    fn default() -> Self {
        PersonShape {
            semi_axis_x_mm: default_semi_axis_x(),
            semi_axis_y_mm: default_semi_axis_y(),
            shoulder_drop_mm: default_shoulder_drop(),
            head_radius_px: default_head_radius_px(),
        }
    }
}

fn default_product_half_px() -> u32 {
    12
}
fn default_product_raise() -> f64 {
    40.0
}
fn default_negative_offset() -> (i32, i32) {
    (16, 0)
}
fn default_contact_above() -> f64 {
    120.0
}
fn default_arm_half_px() -> f64 {
    5.0
}

/// Shelf band along the top image border, with a product cell grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimShelf {
    pub zone_id: String,
    /// Zone rectangle: u in [x_sx, x_dx), v in [0, y_dist).
    pub x_sx: u32,
    pub x_dx: u32,
    pub y_dist: u32,
    /// Shelf top surface height above the floor, millimeters.
    pub shelf_plane_mm: f64,
    pub grid_cols: u32,
    pub grid_rows: u32,
    /// Product patch half-size in pixels.
    #[serde(default = "default_product_half_px")]
    pub product_half_px: u32,
    /// How far product tops rise above the shelf plane.
    #[serde(default = "default_product_raise")]
    pub product_raise_mm: f64,
    /// Pixel offset applied when a Negative reach puts the product back.
    #[serde(default = "default_negative_offset")]
    pub negative_offset_px: (i32, i32),
    /// Hand height above the shelf plane at the contact point.
    #[serde(default = "default_contact_above")]
    pub contact_above_mm: f64,
    /// Arm lobe half-width in pixels.
    #[serde(default = "default_arm_half_px")]
    pub arm_half_px: f64,
    /// Cells stocked with a product at t=0; `None` stocks every cell.
    #[serde(default)]
    pub stocked: Option<Vec<(u32, u32)>>,
}

impl SimShelf {
    /// Integer pixel at the center of a grid cell.
    pub fn cell_center_px(&self, cell: (u32, u32)) -> (u32, u32) {
        let cw = (self.x_dx - self.x_sx) as f64 / self.grid_cols as f64;
        let ch = self.y_dist as f64 / self.grid_rows as f64;
        let u = self.x_sx as f64 + (cell.0 as f64 + 0.5) * cw;
        let v = (cell.1 as f64 + 0.5) * ch;
        (u.round() as u32, v.round() as u32)
    }

    fn is_stocked(&self, cell: (u32, u32)) -> bool {
        match &self.stocked {
            Some(cells) => cells.contains(&cell),
            None => true,
        }
    }
}

fn default_width() -> u32 {
    640
}
fn default_height() -> u32 {
    480
}
fn default_frame_period() -> u64 {
    33
}
fn default_noise() -> f64 {
    8.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
    pub duration_ms: u64,
    #[serde(default = "default_frame_period")]
    pub frame_period_ms: u64,
    pub floor_depth_mm: u16,
    #[serde(default = "default_noise")]
    pub noise_stddev_mm: f64,
    pub seed: u64,
    pub camera: CameraConfig,
    #[serde(default)]
    pub persons: Vec<ScriptedPerson>,
    #[serde(default)]
    pub props: Vec<FlatProp>,
    #[serde(default)]
    pub shelf: Option<SimShelf>,
    #[serde(default)]
    pub person_shape: Option<PersonShape>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::format(format!("scenario: {}", e)))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_ms == 0 || self.frame_period_ms == 0 {
            return Err(Error::argument("duration_ms and frame_period_ms must be positive"));
        }
        if self.floor_depth_mm == 0 || self.floor_depth_mm >= crate::frame::MAX_DEPTH_MM {
            return Err(Error::argument("floor_depth_mm out of valid depth range"));
        }
        if self.noise_stddev_mm < 0.0 {
            return Err(Error::argument("noise_stddev_mm must be non-negative"));
        }
        self.camera.validate(self.width, self.height)?;
        if let Some(shelf) = &self.shelf {
            if shelf.x_sx >= shelf.x_dx || shelf.x_dx > self.width {
                return Err(Error::argument("shelf: require x_sx < x_dx <= width"));
            }
            if shelf.y_dist == 0 || shelf.y_dist > self.height {
                return Err(Error::argument("shelf: require 0 < y_dist <= height"));
            }
            if shelf.shelf_plane_mm <= 0.0 || shelf.shelf_plane_mm >= self.camera.camera_height_mm {
                return Err(Error::argument(
                    "shelf: shelf_plane_mm must lie between floor and camera",
                ));
            }
            if shelf.grid_cols == 0 || shelf.grid_rows == 0 {
                return Err(Error::argument("shelf: grid must be non-empty"));
            }
        }
        for person in &self.persons {
            if person.waypoints.is_empty() {
                return Err(Error::argument(format!(
                    "person {}: needs at least one waypoint",
                    person.id
                )));
            }
            if person.height_mm <= 0.0 || person.height_mm >= self.camera.camera_height_mm {
                return Err(Error::argument(format!(
                    "person {}: body height must lie below the camera",
                    person.id
                )));
            }
            for pair in person.waypoints.windows(2) {
                if pair[1].t_ms <= pair[0].t_ms {
                    return Err(Error::argument(format!(
                        "person {}: waypoint times must strictly increase",
                        person.id
                    )));
                }
            }
            let (entry, exit) = person.presence();
            for reach in &person.reaches {
                if reach.start_ms >= reach.end_ms {
                    return Err(Error::argument(format!(
                        "person {}: reach window is empty",
                        person.id
                    )));
                }
                if reach.start_ms < entry || reach.end_ms > exit {
                    return Err(Error::argument(format!(
                        "person {}: reach window outside presence window",
                        person.id
                    )));
                }
                let shelf = self.shelf.as_ref().ok_or_else(|| {
                    Error::argument("reach actions require a shelf in the scenario")
                })?;
                if reach.cell.0 >= shelf.grid_cols || reach.cell.1 >= shelf.grid_rows {
                    return Err(Error::argument(format!(
                        "person {}: reach cell {:?} outside grid",
                        person.id, reach.cell
                    )));
                }
            }
        }
        // Product state is kept simple: one mutating reach per cell per run.
        if let Some(shelf) = &self.shelf {
            let mut mutated = Vec::new();
            for person in &self.persons {
                for reach in &person.reaches {
                    if reach.kind != InteractionKind::Neutral {
                        if !shelf.is_stocked(reach.cell) {
                            return Err(Error::argument(format!(
                                "reach on unstocked cell {:?}",
                                reach.cell
                            )));
                        }
                        if mutated.contains(&reach.cell) {
                            return Err(Error::argument(format!(
                                "cell {:?} mutated by more than one reach",
                                reach.cell
                            )));
                        }
                        mutated.push(reach.cell);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Ground-truth pose of one person in one frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtPerson {
    pub id: u32,
    pub u: u32,
    pub v: u32,
    pub depth_mm: f64,
    pub x_mm: f64,
    pub y_mm: f64,
    pub height_mm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtFrame {
    pub frame: usize,
    pub t_ms: u64,
    pub persons: Vec<GtPerson>,
}

/// Ground-truth interaction, with both time and frame spans.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtEvent {
    pub person_id: u32,
    pub zone_id: String,
    pub kind: InteractionKind,
    pub start_ms: u64,
    pub end_ms: u64,
    pub start_frame: usize,
    pub end_frame: usize,
    pub cell: (u32, u32),
    pub contact_u: u32,
    pub contact_v: u32,
    /// World coordinates of the contact pixel center (x, y, z-above-floor).
    pub contact_world: (f64, f64, f64),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GroundTruthLog {
    pub frames: Vec<GtFrame>,
    pub events: Vec<GtEvent>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum GtRecord {
    Frame(GtFrame),
    Event(GtEvent),
}

impl GroundTruthLog {
    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for frame in &self.frames {
            let line = serde_json::to_string(&GtRecord::Frame(frame.clone())).unwrap();
            writeln!(out, "{}", line).map_err(|e| Error::io(path, e))?;
        }
        for event in &self.events {
            let line = serde_json::to_string(&GtRecord::Event(event.clone())).unwrap();
            writeln!(out, "{}", line).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = std::io::BufReader::new(file);
        let mut log = GroundTruthLog::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: GtRecord = serde_json::from_str(&line)
                .map_err(|e| Error::format(format!("{} line {}: {}", path.display(), i + 1, e)))?;
            match record {
                GtRecord::Frame(f) => log.frames.push(f),
                GtRecord::Event(e) => log.events.push(e),
            }
        }
        Ok(log)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProductState {
    Present { offset: (i32, i32) },
    Absent,
}

/// Product patch state of `cell` at time `t`, after applying its (single)
/// mutating reach, if any.
fn product_state_at(
    shelf: &SimShelf,
    cell: (u32, u32),
    t_ms: u64,
    mutations: &[(u64, u64, InteractionKind, (u32, u32))],
) -> ProductState {
    if !shelf.is_stocked(cell) {
        return ProductState::Absent;
    }
    for &(start, end, kind, target) in mutations {
        if target != cell {
            continue;
        }
        let dur = end - start;
        match kind {
            InteractionKind::Positive => {
                // removed 40% into the reach, never restored
                if t_ms >= start + dur * 2 / 5 {
                    return ProductState::Absent;
                }
            }
            InteractionKind::Negative => {
                // removed at 30%, put back displaced at 70%
                if t_ms >= start + dur * 7 / 10 {
                    return ProductState::Present {
                        offset: shelf.negative_offset_px,
                    };
                }
                if t_ms >= start + dur * 3 / 10 {
                    return ProductState::Absent;
                }
            }
            InteractionKind::Neutral => {}
        }
    }
    ProductState::Present { offset: (0, 0) }
}

/// Renders the scenario. Pure function of (scenario, seed): identical
/// inputs produce identical frames and ground truth.
pub fn simulate(scenario: &Scenario) -> Result<(Vec<DepthFrame>, GroundTruthLog)> {
    scenario.validate()?;
    let cam = &scenario.camera;
    let shape = scenario.person_shape.clone().unwrap_or_default();
    let width = scenario.width as usize;
    let height = scenario.height as usize;
    let n = width * height;

    // One mutation list drives product timelines for all cells.
    let mut mutations: Vec<(u64, u64, InteractionKind, (u32, u32))> = Vec::new();
    for person in &scenario.persons {
        for reach in &person.reaches {
            if reach.kind != InteractionKind::Neutral {
                mutations.push((reach.start_ms, reach.end_ms, reach.kind, reach.cell));
            }
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    let noise = if scenario.noise_stddev_mm > 0.0 {
        Some(Normal::new(0.0, scenario.noise_stddev_mm).unwrap())
    } else {
        None
    };

    let frame_count = (scenario.duration_ms / scenario.frame_period_ms) as usize;
    let mut frames = Vec::with_capacity(frame_count);
    let mut truth = GroundTruthLog::default();
    let mut depth = vec![0f64; n];

    for fi in 0..frame_count {
        let t = fi as u64 * scenario.frame_period_ms;
        depth.fill(scenario.floor_depth_mm as f64);

        if let Some(shelf) = &scenario.shelf {
            let surface = cam.camera_height_mm - shelf.shelf_plane_mm;
            for v in 0..shelf.y_dist as usize {
                let row = v * width;
                for u in shelf.x_sx as usize..shelf.x_dx as usize {
                    depth[row + u] = surface;
                }
            }
            let product_depth = surface - shelf.product_raise_mm;
            for col in 0..shelf.grid_cols {
                for row in 0..shelf.grid_rows {
                    let state = product_state_at(shelf, (col, row), t, &mutations);
                    if let ProductState::Present { offset } = state {
                        let (cu, cv) = shelf.cell_center_px((col, row));
                        let cu = cu as i64 + offset.0 as i64;
                        let cv = cv as i64 + offset.1 as i64;
                        let half = shelf.product_half_px as i64;
                        for pv in (cv - half).max(0)..(cv + half).min(shelf.y_dist as i64) {
                            for pu in (cu - half).max(shelf.x_sx as i64)
                                ..(cu + half).min(shelf.x_dx as i64)
                            {
                                depth[pv as usize * width + pu as usize] = product_depth;
                            }
                        }
                    }
                }
            }
        }

        let mut gt_persons = Vec::new();
        for person in &scenario.persons {
            let Some((x, y)) = person.position_at(t) else {
                continue;
            };
            let apex = cam.camera_height_mm - person.height_mm;
            let (ucf, vcf) = cam.project(x, y, apex);
            let a = cam.fx * shape.semi_axis_x_mm / apex;
            let b = cam.fy * shape.semi_axis_y_mm / apex;
            render_person(&mut depth, width, height, ucf, vcf, a, b, apex, &shape);

            // arm lobe toward the contact point during an active reach
            for reach in &person.reaches {
                if t < reach.start_ms || t >= reach.end_ms {
                    continue;
                }
                let shelf = scenario.shelf.as_ref().unwrap();
                let (cu, cv) = shelf.cell_center_px(reach.cell);
                let contact_depth =
                    cam.camera_height_mm - (shelf.shelf_plane_mm + shelf.contact_above_mm);
                render_arm(
                    &mut depth,
                    width,
                    height,
                    (ucf, vcf),
                    (cu as f64, cv as f64),
                    apex + shape.shoulder_drop_mm,
                    contact_depth,
                    shelf.arm_half_px,
                );
            }

            let hu = ucf.round();
            let hv = vcf.round();
            if hu >= 0.0 && hu < scenario.width as f64 && hv >= 0.0 && hv < scenario.height as f64 {
                gt_persons.push(GtPerson {
                    id: person.id,
                    u: hu as u32,
                    v: hv as u32,
                    depth_mm: apex,
                    x_mm: x,
                    y_mm: y,
                    height_mm: person.height_mm,
                });
            }
        }

        for prop in &scenario.props {
            let fake = ScriptedPerson {
                id: 0,
                height_mm: prop.top_height_mm,
                waypoints: prop.waypoints.clone(),
                reaches: Vec::new(),
            };
            let Some((x, y)) = fake.position_at(t) else {
                continue;
            };
            let d = cam.camera_height_mm - prop.top_height_mm;
            let (ucf, vcf) = cam.project(x, y, d);
            let hw = cam.fx * prop.half_width_mm / d;
            let hh = cam.fy * prop.half_depth_mm / d;
            let v0 = (vcf - hh).max(0.0) as usize;
            let v1 = ((vcf + hh) as usize).min(height.saturating_sub(1));
            let u0 = (ucf - hw).max(0.0) as usize;
            let u1 = ((ucf + hw) as usize).min(width.saturating_sub(1));
            for pv in v0..=v1 {
                for pu in u0..=u1 {
                    let i = pv * width + pu;
                    if d < depth[i] {
                        depth[i] = d;
                    }
                }
            }
        }

        let mut data = Vec::with_capacity(n);
        match &noise {
            Some(dist) => {
                for &d in depth.iter() {
                    let s = d + dist.sample(&mut rng);
                    data.push(s.clamp(1.0, 9999.0).round() as u16);
                }
            }
            None => {
                for &d in depth.iter() {
                    data.push(d.clamp(1.0, 9999.0).round() as u16);
                }
            }
        }

        frames.push(DepthFrame {
            width: scenario.width,
            height: scenario.height,
            timestamp_ms: t,
            data,
        });
        truth.frames.push(GtFrame {
            frame: fi,
            t_ms: t,
            persons: gt_persons,
        });
    }

    // Ground-truth interaction events.
    if let Some(shelf) = &scenario.shelf {
        for person in &scenario.persons {
            for reach in &person.reaches {
                let start_frame = frames
                    .iter()
                    .position(|f| f.timestamp_ms >= reach.start_ms)
                    .unwrap_or(0);
                let end_frame = frames
                    .iter()
                    .rposition(|f| f.timestamp_ms < reach.end_ms)
                    .unwrap_or(start_frame);
                let (cu, cv) = shelf.cell_center_px(reach.cell);
                let contact_depth =
                    cam.camera_height_mm - (shelf.shelf_plane_mm + shelf.contact_above_mm);
                let wx = (cu as f64 - cam.cx) * contact_depth / cam.fx;
                let wy = (cv as f64 - cam.cy) * contact_depth / cam.fy;
                let wz = cam.camera_height_mm - contact_depth;
                truth.events.push(GtEvent {
                    person_id: person.id,
                    zone_id: shelf.zone_id.clone(),
                    kind: reach.kind,
                    start_ms: reach.start_ms,
                    end_ms: reach.end_ms,
                    start_frame,
                    end_frame,
                    cell: reach.cell,
                    contact_u: cu,
                    contact_v: cv,
                    contact_world: (wx, wy, wz),
                });
            }
        }
        truth.events.sort_by_key(|e| (e.start_ms, e.person_id));
    }

    Ok((frames, truth))
}

#[allow(clippy::too_many_arguments)]
fn render_person(
    depth: &mut [f64],
    width: usize,
    height: usize,
    ucf: f64,
    vcf: f64,
    a: f64,
    b: f64,
    apex: f64,
    shape: &PersonShape,
) {
    let head_r2 = shape.head_radius_px * shape.head_radius_px;
    let v0 = (vcf - b).max(0.0) as usize;
    let v1 = (((vcf + b).max(0.0)) as usize).min(height.saturating_sub(1));
    let u0 = (ucf - a).max(0.0) as usize;
    let u1 = (((ucf + a).max(0.0)) as usize).min(width.saturating_sub(1));
    for v in v0..=v1 {
        for u in u0..=u1 {
            let du = u as f64 - ucf;
            let dv = v as f64 - vcf;
            let e = (du / a).powi(2) + (dv / b).powi(2);
            if e > 1.0 {
                continue;
            }
            let r2 = du * du + dv * dv;
            let d = apex + shape.shoulder_drop_mm * (r2 / head_r2).min(1.0);
            let i = v * width + u;
            if d < depth[i] {
                depth[i] = d;
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn render_arm(
    depth: &mut [f64],
    width: usize,
    height: usize,
    from: (f64, f64),
    to: (f64, f64),
    from_depth: f64,
    to_depth: f64,
    half_px: f64,
) {
    let (x0, y0) = from;
    let (x1, y1) = to;
    let dx = x1 - x0;
    let dy = y1 - y0;
    let len2 = dx * dx + dy * dy;
    let u0 = (x0.min(x1) - half_px).max(0.0) as usize;
    let u1 = (((x0.max(x1) + half_px).max(0.0)) as usize).min(width.saturating_sub(1));
    let v0 = (y0.min(y1) - half_px).max(0.0) as usize;
    let v1 = (((y0.max(y1) + half_px).max(0.0)) as usize).min(height.saturating_sub(1));
    for v in v0..=v1 {
        for u in u0..=u1 {
            let px = u as f64 - x0;
            let py = v as f64 - y0;
            let s = if len2 == 0.0 {
                0.0
            } else {
                ((px * dx + py * dy) / len2).clamp(0.0, 1.0)
            };
            let qx = px - s * dx;
            let qy = py - s * dy;
            if qx * qx + qy * qy > half_px * half_px {
                continue;
            }
            let d = from_depth + s * (to_depth - from_depth);
            let i = v * width + u;
            if d < depth[i] {
                depth[i] = d;
            }
        }
    }
}

/// True if the pixel lies within the rendered arm lobe of the given reach at
/// time `t`: an independent geometric restatement used by tests.
pub fn arm_footprint_contains(
    scenario: &Scenario,
    person: &ScriptedPerson,
    reach: &Reach,
    t_ms: u64,
    u: u32,
    v: u32,
) -> bool {
    if t_ms < reach.start_ms || t_ms >= reach.end_ms {
        return false;
    }
    let Some((x, y)) = person.position_at(t_ms) else {
        return false;
    };
    let shelf = match &scenario.shelf {
        Some(s) => s,
        None => return false,
    };
    let cam = &scenario.camera;
    let apex = cam.camera_height_mm - person.height_mm;
    let (x0, y0) = cam.project(x, y, apex);
    let (cu, cv) = shelf.cell_center_px(reach.cell);
    let (x1, y1) = (cu as f64, cv as f64);
    let dx = x1 - x0;
    let dy = y1 - y0;
    let len2 = dx * dx + dy * dy;
    let px = u as f64 - x0;
    let py = v as f64 - y0;
    let s = if len2 == 0.0 {
        0.0
    } else {
        ((px * dx + py * dy) / len2).clamp(0.0, 1.0)
    };
    let qx = px - s * dx;
    let qy = py - s * dy;
    qx * qx + qy * qy <= shelf.arm_half_px * shelf.arm_half_px
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_camera() -> CameraConfig {
        CameraConfig {
            camera_height_mm: 3000.0,
            fx: 300.0,
            fy: 400.0,
            cx: 160.0,
            cy: 120.0,
            camera_id: "cam1".into(),
        }
    }

    fn empty_scenario() -> Scenario {
        Scenario {
            width: 320,
            height: 240,
            duration_ms: 500,
            frame_period_ms: 100,
            floor_depth_mm: 3000,
            noise_stddev_mm: 8.0,
            seed: 7,
            camera: small_camera(),
            persons: Vec::new(),
            props: Vec::new(),
            shelf: None,
            person_shape: None,
        }
    }

    #[test]
    fn empty_scene_is_floor_plus_noise() {
        let (frames, truth) = simulate(&empty_scenario()).unwrap();
        assert_eq!(frames.len(), 5);
        assert!(truth.events.is_empty());
        for frame in &frames {
            for &d in &frame.data {
                assert!((d as f64 - 3000.0).abs() <= 8.0 * 6.0, "depth {}", d);
            }
        }
    }

    #[test]
    fn head_apex_matches_body_height() {
        let mut scenario = empty_scenario();
        scenario.noise_stddev_mm = 0.0;
        scenario.duration_ms = 200;
        scenario.persons.push(ScriptedPerson {
            id: 1,
            height_mm: 1750.0,
            waypoints: vec![
                Waypoint { t_ms: 0, x_mm: 0.0, y_mm: 90.0 },
                Waypoint { t_ms: 200, x_mm: 0.0, y_mm: 90.0 },
            ],
            reaches: Vec::new(),
        });
        let (frames, truth) = simulate(&scenario).unwrap();
        let min = *frames[0].data.iter().min().unwrap();
        assert_eq!(min, 1250);
        let gt = &truth.frames[0].persons[0];
        assert_eq!(frames[0].depth_at(gt.u, gt.v), 1250);
    }

    #[test]
    fn shoulder_ring_is_deeper_than_apex() {
        let mut scenario = empty_scenario();
        scenario.noise_stddev_mm = 0.0;
        scenario.duration_ms = 100;
        scenario.person_shape = Some(PersonShape {
            head_radius_px: 7.0,
            ..PersonShape::default()
        });
        scenario.persons.push(ScriptedPerson {
            id: 1,
            height_mm: 1700.0,
            waypoints: vec![
                Waypoint { t_ms: 0, x_mm: 0.0, y_mm: 90.0 },
                Waypoint { t_ms: 100, x_mm: 0.0, y_mm: 90.0 },
            ],
            reaches: Vec::new(),
        });
        let (frames, truth) = simulate(&scenario).unwrap();
        let gt = &truth.frames[0].persons[0];
        let apex = frames[0].depth_at(gt.u, gt.v) as f64;
        // ring at 8 px (outside head radius) should be >= 150 mm deeper
        for (du, dv) in [(8i32, 0i32), (-8, 0), (0, 8), (0, -8)] {
            let d = frames[0].depth_at((gt.u as i32 + du) as u32, (gt.v as i32 + dv) as u32);
            assert!(d as f64 >= apex + 150.0, "ring depth {} apex {}", d, apex);
        }
    }

    #[test]
    fn scripted_positive_reach_yields_one_positive_event() {
        let mut scenario = empty_scenario();
        scenario.duration_ms = 2000;
        scenario.shelf = Some(SimShelf {
            zone_id: "z1".into(),
            x_sx: 10,
            x_dx: 310,
            y_dist: 60,
            shelf_plane_mm: 1200.0,
            grid_cols: 4,
            grid_rows: 1,
            product_half_px: 9,
            product_raise_mm: 40.0,
            negative_offset_px: (12, 0),
            contact_above_mm: 120.0,
            arm_half_px: 4.0,
            stocked: None,
        });
        scenario.persons.push(ScriptedPerson {
            id: 1,
            height_mm: 1750.0,
            waypoints: vec![
                Waypoint { t_ms: 0, x_mm: 0.0, y_mm: 90.0 },
                Waypoint { t_ms: 2000, x_mm: 0.0, y_mm: 90.0 },
            ],
            reaches: vec![Reach {
                start_ms: 500,
                end_ms: 1500,
                cell: (1, 0),
                kind: InteractionKind::Positive,
            }],
        });
        let (_, truth) = simulate(&scenario).unwrap();
        assert_eq!(truth.events.len(), 1);
        assert_eq!(truth.events[0].kind, InteractionKind::Positive);
        assert_eq!(truth.events[0].cell, (1, 0));
    }

    #[test]
    fn deterministic_for_same_seed() {
        let scenario = empty_scenario();
        let (a, _) = simulate(&scenario).unwrap();
        let (b, _) = simulate(&scenario).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ground_truth_round_trips_through_jsonl() {
        let mut scenario = empty_scenario();
        scenario.duration_ms = 300;
        scenario.persons.push(ScriptedPerson {
            id: 3,
            height_mm: 1600.0,
            waypoints: vec![
                Waypoint { t_ms: 0, x_mm: -100.0, y_mm: 90.0 },
                Waypoint { t_ms: 300, x_mm: 100.0, y_mm: 90.0 },
            ],
            reaches: Vec::new(),
        });
        let (_, truth) = simulate(&scenario).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.jsonl");
        truth.save_jsonl(&path).unwrap();
        let back = GroundTruthLog::load_jsonl(&path).unwrap();
        assert_eq!(back.frames.len(), truth.frames.len());
        assert_eq!(back.frames[1].persons[0].id, 3);
    }

    #[test]
    fn reach_outside_presence_rejected() {
        let mut scenario = empty_scenario();
        scenario.shelf = Some(SimShelf {
            zone_id: "z1".into(),
            x_sx: 10,
            x_dx: 310,
            y_dist: 60,
            shelf_plane_mm: 1200.0,
            grid_cols: 4,
            grid_rows: 1,
            product_half_px: 9,
            product_raise_mm: 40.0,
            negative_offset_px: (12, 0),
            contact_above_mm: 120.0,
            arm_half_px: 4.0,
            stocked: None,
        });
        scenario.persons.push(ScriptedPerson {
            id: 1,
            height_mm: 1700.0,
            waypoints: vec![
                Waypoint { t_ms: 100, x_mm: 0.0, y_mm: 90.0 },
                Waypoint { t_ms: 400, x_mm: 0.0, y_mm: 90.0 },
            ],
            reaches: vec![Reach {
                start_ms: 0,
                end_ms: 300,
                cell: (0, 0),
                kind: InteractionKind::Neutral,
            }],
        });
        assert!(simulate(&scenario).is_err());
    }
}
