//! Interactions map: colored discs at contact points drawn over a
//! planogram image. Green = positive, red = negative, yellow = neutral.

use crate::events::{InteractionEvent, InteractionKind};
use crate::frame::CameraConfig;
use crate::interaction::ShelfZone;
use crate::netpbm::RgbImage;

pub const COLOR_POSITIVE: [u8; 3] = [0, 255, 0];
pub const COLOR_NEGATIVE: [u8; 3] = [255, 0, 0];
pub const COLOR_NEUTRAL: [u8; 3] = [255, 255, 0];

pub fn marker_color(kind: InteractionKind) -> [u8; 3] {
    match kind {
        InteractionKind::Positive => COLOR_POSITIVE,
        InteractionKind::Negative => COLOR_NEGATIVE,
        InteractionKind::Neutral => COLOR_NEUTRAL,
    }
}

/// Planogram canvas plus the affine map from the shelf zone onto it.
#[derive(Debug, Clone)]
pub struct Planogram {
    pub image: RgbImage,
    /// Target rectangle on the planogram: (x, y, w, h) pixels.
    pub rect_px: (u32, u32, u32, u32),
    pub marker_radius_px: u32,
}

impl Planogram {
    pub fn rect_fits(&self) -> bool {
        let (x, y, w, h) = self.rect_px;
        w > 0 && h > 0 && x + w <= self.image.width && y + h <= self.image.height
    }
}

/// Result of a render: the raster plus the number of skipped events.
pub struct RenderedMap {
    pub image: RgbImage,
    pub skipped: usize,
}

/// Draws one disc per event at the contact's projected position within the
/// zone rectangle, in event order (later events paint over earlier ones).
/// Events outside the zone or its grid are skipped and counted.
pub fn render_map(
    planogram: &Planogram,
    events: &[InteractionEvent],
    zone: &ShelfZone,
    camera: &CameraConfig,
) -> RenderedMap {
    let mut image = planogram.image.clone();
    let (rx, ry, rw, rh) = planogram.rect_px;
    let mut skipped = 0usize;
    for event in events {
        if event.zone_id != zone.zone_id {
            skipped += 1;
            continue;
        }
        // re-project the stored world contact into zone image coordinates
        let depth = camera.camera_height_mm - event.contact.z;
        if depth <= 0.0 {
            skipped += 1;
            continue;
        }
        let (u, v) = camera.project(event.contact.x, event.contact.y, depth);
        if u < zone.x_sx as f64 || u >= zone.x_dx as f64 || v < 0.0 || v >= zone.y_dist as f64 {
            skipped += 1;
            continue;
        }
        let fu = (u - zone.x_sx as f64) / (zone.x_dx - zone.x_sx) as f64;
        let fv = v / zone.y_dist as f64;
        let cx = rx as i64 + (fu * rw as f64) as i64;
        let cy = ry as i64 + (fv * rh as f64) as i64;
        draw_disc(
            &mut image,
            cx,
            cy,
            planogram.marker_radius_px as i64,
            marker_color(event.kind),
        );
    }
    RenderedMap { image, skipped }
}

/// Integer midpoint circle fill.
fn draw_disc(image: &mut RgbImage, cx: i64, cy: i64, r: i64, color: [u8; 3]) {
    for dy in -r..=r {
        let y = cy + dy;
        if y < 0 || y >= image.height as i64 {
            continue;
        }
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let x = cx + dx;
            if x < 0 || x >= image.width as i64 {
                continue;
            }
            image.put(x as u32, y as u32, color);
        }
    }
}
