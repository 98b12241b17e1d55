//! Pipeline configuration: flat `section.key = value` text file with
//! defaults for every parameter.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::analytics::CellCatalog;
use crate::detection::DetectionParams;
use crate::error::{Error, Result};
use crate::frame::CameraConfig;
use crate::interaction::{InteractionParams, ShelfZone};
use crate::tracking::TrackerParams;

#[derive(Debug, Clone)]
pub struct BackgroundParams {
    pub init_frames: usize,
    pub alpha: f64,
    pub threshold_mm: f64,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        BackgroundParams {
            init_frames: 30,
            alpha: 0.05,
            threshold_mm: 120.0,
        }
    }
}

/// Planogram mapping for `rendermap`.
#[derive(Debug, Clone)]
pub struct MapConfig {
    pub zone_id: String,
    /// (x, y, w, h) target rectangle on the planogram.
    pub rect_px: (u32, u32, u32, u32),
    pub marker_radius_px: u32,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub camera: CameraConfig,
    pub bg: BackgroundParams,
    pub det: DetectionParams,
    pub trk: TrackerParams,
    /// Visits shorter than this are dropped as detector glitches.
    pub min_visit_ms: u64,
    pub int: InteractionParams,
    pub zones: Vec<ShelfZone>,
    pub catalog: CellCatalog,
    pub map: Option<MapConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            // Defaults reproduce a 3.2 m x 1.8 m floor footprint at
            // 640x480 with the sensor 3 m above the floor.
            camera: CameraConfig {
                camera_height_mm: 3000.0,
                fx: 600.0,
                fy: 800.0,
                cx: 320.0,
                cy: 240.0,
                camera_id: "cam1".into(),
            },
            bg: BackgroundParams::default(),
            det: DetectionParams::default(),
            trk: TrackerParams::default(),
            min_visit_ms: 300,
            int: InteractionParams::default(),
            zones: Vec::new(),
            catalog: CellCatalog::new(),
            map: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        let mut zone_order: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::format(format!(
                    "config line {}: expected key = value",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if let Some(rest) = key.strip_prefix("zone.") {
                if let Some((id, _)) = rest.split_once('.') {
                    if !zone_order.iter().any(|z| z == id) {
                        zone_order.push(id.to_string());
                    }
                }
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::format(format!(
                    "config line {}: duplicate key {}",
                    lineno + 1,
                    key
                )));
            }
        }

        let mut config = PipelineConfig::default();
        let mut used: Vec<String> = Vec::new();
        {
            let mut get = |key: &str| -> Option<String> {
                used.push(key.to_string());
                entries.get(key).cloned()
            };
            let cam = &mut config.camera;
            set_f64(&mut get, "cam.height_mm", &mut cam.camera_height_mm)?;
            set_f64(&mut get, "cam.fx", &mut cam.fx)?;
            set_f64(&mut get, "cam.fy", &mut cam.fy)?;
            set_f64(&mut get, "cam.cx", &mut cam.cx)?;
            set_f64(&mut get, "cam.cy", &mut cam.cy)?;
            if let Some(v) = get("cam.id") {
                cam.camera_id = v;
            }
            set_usize(&mut get, "bg.init_frames", &mut config.bg.init_frames)?;
            set_f64(&mut get, "bg.alpha", &mut config.bg.alpha)?;
            set_f64(&mut get, "bg.threshold_mm", &mut config.bg.threshold_mm)?;
            set_usize(&mut get, "det.min_blob_area", &mut config.det.min_blob_area)?;
            set_f64(&mut get, "det.jump_mm", &mut config.det.jump_mm)?;
            set_u32(&mut get, "det.ring_radius_px", &mut config.det.ring_radius_px)?;
            set_f64(&mut get, "det.height_min_mm", &mut config.det.height_min_mm)?;
            set_f64(&mut get, "det.height_max_mm", &mut config.det.height_max_mm)?;
            set_f64(&mut get, "trk.max_disp_px", &mut config.trk.max_disp_px_per_frame)?;
            set_f64(&mut get, "trk.height_gate_mm", &mut config.trk.height_gate_mm)?;
            set_u64(&mut get, "trk.lost_timeout_ms", &mut config.trk.lost_timeout_ms)?;
            set_u64(&mut get, "trk.min_visit_ms", &mut config.min_visit_ms)?;
            set_u32(&mut get, "int.patch_px", &mut config.int.patch_px)?;
            set_f64(&mut get, "int.sim_threshold", &mut config.int.sim_threshold)?;
            set_f64(&mut get, "int.area_tol", &mut config.int.area_tol)?;
            set_u32(&mut get, "int.debounce_frames", &mut config.int.debounce_frames)?;
            set_f64(&mut get, "int.occ_margin_mm", &mut config.int.occ_margin_mm)?;

            for id in &zone_order {
                let key = |field: &str| format!("zone.{}.{}", id, field);
                let mut zone = ShelfZone {
                    zone_id: id.clone(),
                    x_sx: 0,
                    x_dx: 0,
                    y_dist: 0,
                    shelf_plane_mm: 2000.0,
                    cell_grid: (1, 1),
                };
                set_u32(&mut get, &key("x_sx"), &mut zone.x_sx)?;
                set_u32(&mut get, &key("x_dx"), &mut zone.x_dx)?;
                set_u32(&mut get, &key("y_dist"), &mut zone.y_dist)?;
                set_f64(&mut get, &key("shelf_plane_mm"), &mut zone.shelf_plane_mm)?;
                set_u32(&mut get, &key("grid_cols"), &mut zone.cell_grid.0)?;
                set_u32(&mut get, &key("grid_rows"), &mut zone.cell_grid.1)?;
                if let Some(cells) = get(&key("cells")) {
                    parse_cells(id, &cells, &mut config.catalog)?;
                }
                config.zones.push(zone);
            }

            if let Some(zone_id) = get("map.zone_id") {
                let rect_text = get("map.rect_px").ok_or_else(|| {
                    Error::format("map.zone_id set but map.rect_px missing")
                })?;
                let rect = parse_rect(&rect_text)?;
                let mut radius = 6u32;
                set_u32(&mut get, "map.marker_radius_px", &mut radius)?;
                config.map = Some(MapConfig {
                    zone_id,
                    rect_px: rect,
                    marker_radius_px: radius,
                });
            } else {
                used.push("map.rect_px".into());
                used.push("map.marker_radius_px".into());
            }
        }

        for key in entries.keys() {
            if !used.iter().any(|u| u == key) {
                return Err(Error::format(format!("unknown config key: {}", key)));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.bg.alpha) || self.bg.alpha == 0.0 {
            return Err(Error::argument("bg.alpha must lie in (0, 1)"));
        }
        if self.bg.threshold_mm <= 0.0 {
            return Err(Error::argument("bg.threshold_mm must be positive"));
        }
        if self.bg.init_frames == 0 {
            return Err(Error::argument("bg.init_frames must be positive"));
        }
        if self.trk.max_disp_px_per_frame <= 0.0
            || self.trk.height_gate_mm <= 0.0
            || self.trk.lost_timeout_ms == 0
        {
            return Err(Error::argument("trk parameters must be strictly positive"));
        }
        if self.int.patch_px == 0 || self.int.debounce_frames == 0 {
            return Err(Error::argument("int parameters must be strictly positive"));
        }
        for zone in &self.zones {
            if zone.x_sx >= zone.x_dx {
                return Err(Error::argument(format!(
                    "zone {}: require x_sx < x_dx",
                    zone.zone_id
                )));
            }
            if zone.y_dist == 0 {
                return Err(Error::argument(format!(
                    "zone {}: y_dist must be positive",
                    zone.zone_id
                )));
            }
            if zone.shelf_plane_mm <= 0.0 || zone.shelf_plane_mm >= self.camera.camera_height_mm {
                return Err(Error::argument(format!(
                    "zone {}: shelf plane must lie between floor and camera",
                    zone.zone_id
                )));
            }
        }
        if let Some(map) = &self.map {
            if !self.zones.iter().any(|z| z.zone_id == map.zone_id) {
                return Err(Error::argument(format!(
                    "map.zone_id {} has no matching zone section",
                    map.zone_id
                )));
            }
        }
        Ok(())
    }

    pub fn zone(&self, id: &str) -> Option<&ShelfZone> {
        self.zones.iter().find(|z| z.zone_id == id)
    }

    /// Renders the effective configuration in config-file syntax.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let c = &self.camera;
        writeln!(out, "cam.height_mm = {}", c.camera_height_mm).unwrap();
        writeln!(out, "cam.fx = {}", c.fx).unwrap();
        writeln!(out, "cam.fy = {}", c.fy).unwrap();
        writeln!(out, "cam.cx = {}", c.cx).unwrap();
        writeln!(out, "cam.cy = {}", c.cy).unwrap();
        writeln!(out, "cam.id = {}", c.camera_id).unwrap();
        writeln!(out, "bg.init_frames = {}", self.bg.init_frames).unwrap();
        writeln!(out, "bg.alpha = {}", self.bg.alpha).unwrap();
        writeln!(out, "bg.threshold_mm = {}", self.bg.threshold_mm).unwrap();
        writeln!(out, "det.min_blob_area = {}", self.det.min_blob_area).unwrap();
        writeln!(out, "det.jump_mm = {}", self.det.jump_mm).unwrap();
        writeln!(out, "det.ring_radius_px = {}", self.det.ring_radius_px).unwrap();
        writeln!(out, "det.height_min_mm = {}", self.det.height_min_mm).unwrap();
        writeln!(out, "det.height_max_mm = {}", self.det.height_max_mm).unwrap();
        writeln!(out, "trk.max_disp_px = {}", self.trk.max_disp_px_per_frame).unwrap();
        writeln!(out, "trk.height_gate_mm = {}", self.trk.height_gate_mm).unwrap();
        writeln!(out, "trk.lost_timeout_ms = {}", self.trk.lost_timeout_ms).unwrap();
        writeln!(out, "trk.min_visit_ms = {}", self.min_visit_ms).unwrap();
        writeln!(out, "int.patch_px = {}", self.int.patch_px).unwrap();
        writeln!(out, "int.sim_threshold = {}", self.int.sim_threshold).unwrap();
        writeln!(out, "int.area_tol = {}", self.int.area_tol).unwrap();
        writeln!(out, "int.debounce_frames = {}", self.int.debounce_frames).unwrap();
        writeln!(out, "int.occ_margin_mm = {}", self.int.occ_margin_mm).unwrap();
        for zone in &self.zones {
            let id = &zone.zone_id;
            writeln!(out, "zone.{}.x_sx = {}", id, zone.x_sx).unwrap();
            writeln!(out, "zone.{}.x_dx = {}", id, zone.x_dx).unwrap();
            writeln!(out, "zone.{}.y_dist = {}", id, zone.y_dist).unwrap();
            writeln!(out, "zone.{}.shelf_plane_mm = {}", id, zone.shelf_plane_mm).unwrap();
            writeln!(out, "zone.{}.grid_cols = {}", id, zone.cell_grid.0).unwrap();
            writeln!(out, "zone.{}.grid_rows = {}", id, zone.cell_grid.1).unwrap();
            let cells: Vec<String> = self
                .catalog
                .iter()
                .filter(|((z, _, _), _)| z == id)
                .map(|((_, c, r), (p, cat))| format!("{},{}:{}:{}", c, r, p, cat))
                .collect();
            if !cells.is_empty() {
                writeln!(out, "zone.{}.cells = {}", id, cells.join(";")).unwrap();
            }
        }
        if let Some(map) = &self.map {
            writeln!(out, "map.zone_id = {}", map.zone_id).unwrap();
            let (x, y, w, h) = map.rect_px;
            writeln!(out, "map.rect_px = [{},{},{},{}]", x, y, w, h).unwrap();
            writeln!(out, "map.marker_radius_px = {}", map.marker_radius_px).unwrap();
        }
        out
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, text: &str) -> Result<T> {
    text.parse::<T>()
        .map_err(|_| Error::format(format!("config key {}: invalid value '{}'", key, text)))
}

fn set_f64(get: &mut impl FnMut(&str) -> Option<String>, key: &str, slot: &mut f64) -> Result<()> {
    if let Some(v) = get(key) {
        *slot = parse_value(key, &v)?;
    }
    Ok(())
}

fn set_u32(get: &mut impl FnMut(&str) -> Option<String>, key: &str, slot: &mut u32) -> Result<()> {
    if let Some(v) = get(key) {
        *slot = parse_value(key, &v)?;
    }
    Ok(())
}

fn set_u64(get: &mut impl FnMut(&str) -> Option<String>, key: &str, slot: &mut u64) -> Result<()> {
    if let Some(v) = get(key) {
        *slot = parse_value(key, &v)?;
    }
    Ok(())
}

fn set_usize(
    get: &mut impl FnMut(&str) -> Option<String>,
    key: &str,
    slot: &mut usize,
) -> Result<()> {
    if let Some(v) = get(key) {
        *slot = parse_value(key, &v)?;
    }
    Ok(())
}

/// `[x,y,w,h]`
fn parse_rect(text: &str) -> Result<(u32, u32, u32, u32)> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::format(format!("map.rect_px: expected [x,y,w,h], got '{}'", text)))?;
    let parts: Vec<u32> = inner
        .split(',')
        .map(|p| parse_value("map.rect_px", p.trim()))
        .collect::<Result<_>>()?;
    if parts.len() != 4 {
        return Err(Error::format("map.rect_px: expected four values"));
    }
    Ok((parts[0], parts[1], parts[2], parts[3]))
}

/// `col,row:product:category;col,row:product:category;...`
fn parse_cells(zone_id: &str, text: &str, catalog: &mut CellCatalog) -> Result<()> {
    for item in text.split(';') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::format(format!(
                "zone.{}.cells: expected col,row:product:category, got '{}'",
                zone_id, item
            )));
        }
        let (col_text, row_text) = parts[0].split_once(',').ok_or_else(|| {
            Error::format(format!("zone.{}.cells: bad cell '{}'", zone_id, parts[0]))
        })?;
        let col: u32 = parse_value("cells", col_text.trim())?;
        let row: u32 = parse_value("cells", row_text.trim())?;
        catalog.insert(
            (zone_id.to_string(), col, row),
            (parts[1].trim().to_string(), parts[2].trim().to_string()),
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        let config = PipelineConfig::parse("").unwrap();
        assert_eq!(config.bg.init_frames, 30);
        assert_eq!(config.det.min_blob_area, 400);
        assert_eq!(config.int.patch_px, 64);
        assert!(config.zones.is_empty());
    }

    #[test]
    fn full_config_round_trips_through_dump() {
        let text = "\
cam.height_mm = 3000
cam.fx = 300
cam.fy = 400
cam.cx = 160
cam.cy = 120
cam.id = entrance
bg.alpha = 0.1
det.min_blob_area = 100
trk.max_disp_px = 40
zone.z1.x_sx = 10
zone.z1.x_dx = 310
zone.z1.y_dist = 60
zone.z1.shelf_plane_mm = 1200
zone.z1.grid_cols = 4
zone.z1.grid_rows = 1
zone.z1.cells = 0,0:bleach:cleaning;1,0:soap:cleaning
map.zone_id = z1
map.rect_px = [0, 0, 200, 120]
map.marker_radius_px = 5
";
        let config = PipelineConfig::parse(text).unwrap();
        assert_eq!(config.camera.camera_id, "entrance");
        assert_eq!(config.zones.len(), 1);
        assert_eq!(
            config.catalog.get(&("z1".into(), 0, 0)),
            Some(&("bleach".to_string(), "cleaning".to_string()))
        );
        let map = config.map.as_ref().unwrap();
        assert_eq!(map.rect_px, (0, 0, 200, 120));

        let reparsed = PipelineConfig::parse(&config.dump()).unwrap();
        assert_eq!(reparsed.dump(), config.dump());
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::parse("bg.aplha = 0.1").unwrap_err();
        assert!(err.to_string().contains("bg.aplha"), "{}", err);
    }

    #[test]
    fn invalid_alpha_rejected() {
        assert!(PipelineConfig::parse("bg.alpha = 1.5").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let config = PipelineConfig::parse("# a comment\n\nbg.alpha = 0.2 # trailing\n").unwrap();
        assert_eq!(config.bg.alpha, 0.2);
    }

    #[test]
    fn zone_invariants_enforced() {
        let text = "\
zone.z1.x_sx = 300
zone.z1.x_dx = 10
zone.z1.y_dist = 60
zone.z1.shelf_plane_mm = 1200
zone.z1.grid_cols = 4
zone.z1.grid_rows = 1
";
        assert!(PipelineConfig::parse(text).is_err());
    }
}
