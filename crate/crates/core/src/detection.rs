//! Blob extraction from the foreground mask and person validation via the
//! head-shoulder depth jump.

use std::collections::VecDeque;

use crate::background::ForegroundMask;
use crate::error::{Error, Result};
use crate::frame::{CameraConfig, DepthFrame};

#[derive(Debug, Clone)]
pub struct DetectionParams {
    pub min_blob_area: usize,
    pub jump_mm: f64,
    pub ring_radius_px: u32,
    pub height_min_mm: f64,
    pub height_max_mm: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            min_blob_area: 400,
            jump_mm: 150.0,
            ring_radius_px: 12,
            height_min_mm: 800.0,
            height_max_mm: 2200.0,
        }
    }
}

/// One connected foreground component.
#[derive(Debug, Clone)]
pub struct Blob {
    pub pixel_count: usize,
    /// (u_min, v_min, u_max, v_max), inclusive.
    pub bbox: (u32, u32, u32, u32),
    /// Moore boundary trace, clockwise from the first pixel in scan order.
    pub contour: Vec<(u32, u32)>,
    /// Apex: (u, v, depth_mm), the minimum-depth pixel of the component.
    pub head: (u32, u32, u16),
    pub centroid: (f64, f64),
    /// Occupancy bitmap over the bounding box, row-major.
    mask: Vec<bool>,
}

impl Blob {
    #[inline]
    pub fn contains(&self, u: u32, v: u32) -> bool {
        let (u0, v0, u1, v1) = self.bbox;
        if u < u0 || u > u1 || v < v0 || v > v1 {
            return false;
        }
        let w = (u1 - u0 + 1) as usize;
        self.mask[(v - v0) as usize * w + (u - u0) as usize]
    }
}

const NEIGHBORS_8: [(i32, i32); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

/// 8-connected components of the mask with at least `min_blob_area` pixels,
/// in scan order of their first pixel.
pub fn extract_blobs(
    mask: &ForegroundMask,
    frame: &DepthFrame,
    min_blob_area: usize,
) -> Result<Vec<Blob>> {
    if mask.width != frame.width || mask.height != frame.height {
        return Err(Error::argument("mask dimensions do not match frame"));
    }
    let w = mask.width as i32;
    let h = mask.height as i32;
    let mut visited = vec![false; mask.bits.len()];
    let mut blobs = Vec::new();
    let mut queue = VecDeque::new();
    let mut pixels: Vec<(u32, u32)> = Vec::new();

    for v in 0..h {
        for u in 0..w {
            let start = (v * w + u) as usize;
            if !mask.bits[start] || visited[start] {
                continue;
            }
            pixels.clear();
            visited[start] = true;
            queue.push_back((u, v));
            while let Some((cu, cv)) = queue.pop_front() {
                pixels.push((cu as u32, cv as u32));
                for (du, dv) in NEIGHBORS_8 {
                    let (nu, nv) = (cu + du, cv + dv);
                    if nu < 0 || nv < 0 || nu >= w || nv >= h {
                        continue;
                    }
                    let ni = (nv * w + nu) as usize;
                    if mask.bits[ni] && !visited[ni] {
                        visited[ni] = true;
                        queue.push_back((nu, nv));
                    }
                }
            }
            if pixels.len() < min_blob_area {
                continue;
            }
            blobs.push(build_blob(&pixels, frame, (u as u32, v as u32)));
        }
    }
    Ok(blobs)
}

fn build_blob(pixels: &[(u32, u32)], frame: &DepthFrame, start: (u32, u32)) -> Blob {
    let mut u0 = u32::MAX;
    let mut v0 = u32::MAX;
    let mut u1 = 0u32;
    let mut v1 = 0u32;
    let mut su = 0f64;
    let mut sv = 0f64;
    for &(u, v) in pixels {
        u0 = u0.min(u);
        v0 = v0.min(v);
        u1 = u1.max(u);
        v1 = v1.max(v);
        su += u as f64;
        sv += v as f64;
    }
    let bw = (u1 - u0 + 1) as usize;
    let bh = (v1 - v0 + 1) as usize;
    let mut local = vec![false; bw * bh];
    for &(u, v) in pixels {
        local[(v - v0) as usize * bw + (u - u0) as usize] = true;
    }

    // apex = minimum valid depth; ties broken by smallest (v, u)
    let mut head = (start.0, start.1, u16::MAX);
    let mut best: Option<(u16, u32, u32)> = None;
    for &(u, v) in pixels {
        let d = frame.depth_at(u, v);
        if d == 0 {
            continue;
        }
        let key = (d, v, u);
        if best.map_or(true, |b| key < b) {
            best = Some(key);
        }
    }
    if let Some((d, v, u)) = best {
        head = (u, v, d);
    }

    let inside = |u: i64, v: i64| -> bool {
        u >= u0 as i64
            && u <= u1 as i64
            && v >= v0 as i64
            && v <= v1 as i64
            && local[(v - v0 as i64) as usize * bw + (u - u0 as i64) as usize]
    };
    let contour = trace_contour(start, pixels.len(), &inside);

    Blob {
        pixel_count: pixels.len(),
        bbox: (u0, v0, u1, v1),
        contour,
        head,
        centroid: (su / pixels.len() as f64, sv / pixels.len() as f64),
        mask: local,
    }
}

/// Moore-neighbor boundary trace with Jacob's stopping criterion. `start`
/// must be the component's first pixel in scan order, so its west neighbor
/// lies outside the component.
fn trace_contour(start: (u32, u32), pixel_count: usize, inside: &dyn Fn(i64, i64) -> bool) -> Vec<(u32, u32)> {
    // clockwise Moore neighborhood, starting west
    const CW: [(i64, i64); 8] = [
        (-1, 0),
        (-1, -1),
        (0, -1),
        (1, -1),
        (1, 0),
        (1, 1),
        (0, 1),
        (-1, 1),
    ];
    let s = (start.0 as i64, start.1 as i64);
    let mut contour = vec![start];
    let mut current = s;
    // backtrack starts at the west neighbor (guaranteed outside)
    let mut back = (s.0 - 1, s.1);
    let entry = back;
    // For thin components the trace legitimately revisits pixels, so
    // termination is on repeated (position, backtrack) state.
    let mut seen = std::collections::HashSet::new();
    seen.insert((current, back));
    let budget = pixel_count * 8 + 8;
    for _ in 0..budget {
        let back_dir = (back.0 - current.0, back.1 - current.1);
        let start_idx = CW.iter().position(|&d| d == back_dir).unwrap();
        let mut found = None;
        for k in 1..=8 {
            let dir = CW[(start_idx + k) % 8];
            let cand = (current.0 + dir.0, current.1 + dir.1);
            if inside(cand.0, cand.1) {
                found = Some(cand);
                break;
            }
            back = cand;
        }
        let Some(next) = found else {
            break; // isolated pixel
        };
        if next == s && back == entry {
            break; // wrapped around to the start from the same side
        }
        current = next;
        if !seen.insert((current, back)) {
            break;
        }
        contour.push((next.0 as u32, next.1 as u32));
    }
    if contour.len() > 1 && contour.last() == Some(&start) {
        contour.pop();
    }
    contour
}

/// Integer points of the midpoint circle of radius `r` around the origin.
fn circle_points(r: i32) -> Vec<(i32, i32)> {
    let mut pts = Vec::new();
    let mut x = r;
    let mut y = 0;
    let mut err = 1 - r;
    while x >= y {
        for &(px, py) in &[
            (x, y),
            (y, x),
            (-y, x),
            (-x, y),
            (-x, -y),
            (-y, -x),
            (y, -x),
            (x, -y),
        ] {
            pts.push((px, py));
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// True iff at least 60% of the blob pixels on the ring around the apex are
/// deeper than the apex by `jump_mm` — the head-shoulder jump of a person.
pub fn validate_head(blob: &Blob, frame: &DepthFrame, jump_mm: f64, ring_radius_px: u32) -> bool {
    let (hu, hv, hd) = blob.head;
    let mut on_ring = 0usize;
    let mut deep = 0usize;
    for (dx, dy) in circle_points(ring_radius_px as i32) {
        let u = hu as i64 + dx as i64;
        let v = hv as i64 + dy as i64;
        if u < 0 || v < 0 || u >= frame.width as i64 || v >= frame.height as i64 {
            continue;
        }
        let (u, v) = (u as u32, v as u32);
        if !blob.contains(u, v) {
            continue;
        }
        on_ring += 1;
        let d = frame.depth_at(u, v);
        if d != 0 && d as f64 >= hd as f64 + jump_mm {
            deep += 1;
        }
    }
    on_ring > 0 && (deep as f64) >= 0.6 * (on_ring as f64)
}

/// Body height from the head apex: camera height minus apex depth.
pub fn estimate_height(blob: &Blob, config: &CameraConfig) -> Result<f64> {
    let depth = blob.head.2 as f64;
    if depth >= config.camera_height_mm {
        return Err(Error::Geometry(format!(
            "head depth {} mm at or below camera height {} mm",
            depth, config.camera_height_mm
        )));
    }
    Ok(config.camera_height_mm - depth)
}

/// Pinhole back-projection to camera-centered world coordinates;
/// z is height above the floor.
pub fn pixel_to_world(u: f64, v: f64, depth_mm: f64, config: &CameraConfig) -> (f64, f64, f64) {
    (
        (u - config.cx) * depth_mm / config.fx,
        (v - config.cy) * depth_mm / config.fy,
        config.camera_height_mm - depth_mm,
    )
}

/// A blob with its person attributes; `valid_head` is the ring test result.
#[derive(Debug, Clone)]
pub struct PersonDetection {
    pub blob: Blob,
    pub height_mm: f64,
    pub valid_head: bool,
}

impl PersonDetection {
    /// Head-validated and within the configured person-height gate.
    pub fn accepted(&self, params: &DetectionParams) -> bool {
        self.valid_head
            && self.height_mm >= params.height_min_mm
            && self.height_mm <= params.height_max_mm
    }
}

/// Runs head validation and height estimation over every blob. Blobs whose
/// apex sits at or above camera height are dropped (degenerate input).
pub fn detect_people(
    blobs: Vec<Blob>,
    frame: &DepthFrame,
    config: &CameraConfig,
    params: &DetectionParams,
) -> Vec<PersonDetection> {
    blobs
        .into_iter()
        .filter_map(|blob| {
            let height_mm = estimate_height(&blob, config).ok()?;
            let valid_head = validate_head(&blob, frame, params.jump_mm, params.ring_radius_px);
            Some(PersonDetection {
                blob,
                height_mm,
                valid_head,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_from(bits: &[&[u8]]) -> ForegroundMask {
        let height = bits.len() as u32;
        let width = bits[0].len() as u32;
        ForegroundMask {
            width,
            height,
            bits: bits.iter().flat_map(|r| r.iter().map(|&b| b != 0)).collect(),
        }
    }

    fn flat_frame(w: u32, h: u32, d: u16) -> DepthFrame {
        DepthFrame::filled(w, h, 0, d)
    }

    #[test]
    fn empty_mask_gives_no_blobs() {
        let mask = mask_from(&[&[0, 0], &[0, 0]]);
        let frame = flat_frame(2, 2, 1000);
        assert!(extract_blobs(&mask, &frame, 1).unwrap().is_empty());
    }

    #[test]
    fn square_blob_counts_pixels() {
        let row = [0u8, 1, 1, 1, 1, 1, 0];
        let empty = [0u8; 7];
        let mask = mask_from(&[&empty, &row, &row, &row, &row, &row, &empty]);
        let frame = flat_frame(7, 7, 1000);
        let blobs = extract_blobs(&mask, &frame, 10).unwrap();
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].pixel_count, 25);
        assert_eq!(blobs[0].bbox, (1, 1, 5, 5));
        // boundary of a 5x5 square has 16 pixels
        assert_eq!(blobs[0].contour.len(), 16);
    }

    #[test]
    fn min_area_filters_small_components() {
        let mask = mask_from(&[&[1, 0, 0], &[0, 0, 0], &[0, 1, 1]]);
        let frame = flat_frame(3, 3, 1000);
        let blobs = extract_blobs(&mask, &frame, 2).unwrap();
        assert_eq!(blobs.len(), 1);
        assert_eq!(blobs[0].pixel_count, 2);
    }

    #[test]
    fn diagonal_pixels_are_one_component() {
        let mask = mask_from(&[&[1, 0], &[0, 1]]);
        let frame = flat_frame(2, 2, 1000);
        let blobs = extract_blobs(&mask, &frame, 1).unwrap();
        assert_eq!(blobs.len(), 1);
    }

    #[test]
    fn apex_is_minimum_with_lexicographic_ties() {
        let mask = mask_from(&[&[1, 1], &[1, 1]]);
        let mut frame = flat_frame(2, 2, 1000);
        frame.data = vec![900, 900, 900, 900];
        let blobs = extract_blobs(&mask, &frame, 1).unwrap();
        assert_eq!(blobs[0].head, (0, 0, 900)); // smallest (v, u) wins
        frame.data = vec![950, 900, 880, 900];
        let blobs = extract_blobs(&mask, &frame, 1).unwrap();
        assert_eq!(blobs[0].head, (0, 1, 880));
    }

    #[test]
    fn blobs_partition_foreground() {
        let mask = mask_from(&[&[1, 1, 0, 1], &[1, 0, 0, 1], &[0, 0, 0, 1]]);
        let frame = flat_frame(4, 3, 1000);
        let blobs = extract_blobs(&mask, &frame, 1).unwrap();
        let total: usize = blobs.iter().map(|b| b.pixel_count).sum();
        assert_eq!(total, mask.count());
        for v in 0..3 {
            for u in 0..4 {
                let owners = blobs.iter().filter(|b| b.contains(u, v)).count();
                assert!(owners <= 1);
                assert_eq!(owners == 1, mask.get(u, v));
            }
        }
    }

    #[test]
    fn single_pixel_contour() {
        let mask = mask_from(&[&[0, 0, 0], &[0, 1, 0], &[0, 0, 0]]);
        let frame = flat_frame(3, 3, 1000);
        let blobs = extract_blobs(&mask, &frame, 1).unwrap();
        assert_eq!(blobs[0].contour, vec![(1, 1)]);
    }

    #[test]
    fn flat_blob_fails_head_validation() {
        let row = [1u8; 30];
        let rows: Vec<&[u8]> = (0..30).map(|_| &row[..]).collect();
        let mask = mask_from(&rows);
        let frame = flat_frame(30, 30, 1400);
        let blobs = extract_blobs(&mask, &frame, 1).unwrap();
        assert!(!validate_head(&blobs[0], &frame, 150.0, 5));
    }

    #[test]
    fn peaked_blob_passes_head_validation() {
        let size = 31u32;
        let mask = ForegroundMask {
            width: size,
            height: size,
            bits: vec![true; (size * size) as usize],
        };
        let mut frame = flat_frame(size, size, 0);
        for v in 0..size {
            for u in 0..size {
                let r2 = ((u as i32 - 15).pow(2) + (v as i32 - 15).pow(2)) as f64;
                let d = 1250.0 + 300.0 * (r2 / 16.0).min(1.0); // steep head spike
                frame.data[(v * size + u) as usize] = d as u16;
            }
        }
        let blobs = extract_blobs(&mask, &frame, 1).unwrap();
        assert_eq!(blobs[0].head.0, 15);
        assert!(validate_head(&blobs[0], &frame, 150.0, 5));
    }

    #[test]
    fn height_from_camera_geometry() {
        let cam = CameraConfig {
            camera_height_mm: 3000.0,
            fx: 600.0,
            fy: 800.0,
            cx: 10.0,
            cy: 10.0,
            camera_id: "c".into(),
        };
        let mask = mask_from(&[&[1]]);
        let frame = DepthFrame::new(1, 1, 0, vec![1250]).unwrap();
        let blob = &extract_blobs(&mask, &frame, 1).unwrap()[0];
        assert_eq!(estimate_height(blob, &cam).unwrap(), 1750.0);

        let deep = DepthFrame::new(1, 1, 0, vec![3000]).unwrap();
        let blob = &extract_blobs(&mask, &deep, 1).unwrap()[0];
        assert!(matches!(estimate_height(blob, &cam), Err(Error::Geometry(_))));
    }

    #[test]
    fn back_projection_examples() {
        let cam = CameraConfig {
            camera_height_mm: 3000.0,
            fx: 600.0,
            fy: 800.0,
            cx: 320.0,
            cy: 240.0,
            camera_id: "c".into(),
        };
        let (x, y, z) = pixel_to_world(320.0, 240.0, 1000.0, &cam);
        assert_eq!((x, y, z), (0.0, 0.0, 2000.0));
        let (x, _, _) = pixel_to_world(920.0, 240.0, 1000.0, &cam);
        assert!((x - 1000.0).abs() < 1e-9);
    }
}
