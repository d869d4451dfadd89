//! Sliding-window tiling of large captures and stitching of tile detections.
//!
//! A [`TilePlan`] fixes the window grid for one image. Offsets along each axis
//! are `0, s, 2s, ...` while the window fits; under [`TilePolicy::Clamp`] a last
//! window is slid back to touch the far edge when the regular grid leaves a
//! strip uncovered. Origins are stored row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annotation, BBox, Detection};
use crate::pseudolabel::nms;
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TilePolicy {
    #[default]
    Clamp,
    DropPartial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileOrigin {
    pub row: u32,
    pub col: u32,
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilePlan {
    pub image_id: String,
    pub image_width: u32,
    pub image_height: u32,
    pub window: (u32, u32),
    pub stride: (u32, u32),
    pub policy: TilePolicy,
    pub origins: Vec<TileOrigin>,
}

/// Offsets along one axis.
pub fn axis_offsets(len: u32, window: u32, stride: u32, policy: TilePolicy) -> Result<Vec<u32>> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidArgument("window and stride must be >= 1".into()));
    }
    if window >= len {
        return match policy {
            TilePolicy::DropPartial if window > len => Err(Error::WindowExceedsImage { window, image: len }),
            _ => Ok(vec![0]),
        };
    }
    let last = len - window;
    let mut offsets: Vec<u32> = (0..).map(|k: u32| k * stride).take_while(|&o| o <= last).collect();
    if policy == TilePolicy::Clamp && *offsets.last().expect("offset 0 always fits") < last {
        offsets.push(last);
    }
    Ok(offsets)
}

pub fn plan_tiles(
    image_id: &str,
    width: u32,
    height: u32,
    window: (u32, u32),
    stride: (u32, u32),
    policy: TilePolicy,
) -> Result<TilePlan> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidArgument(format!("image size {width}x{height}")));
    }
    let xs = axis_offsets(width, window.0, stride.0, policy)?;
    let ys = axis_offsets(height, window.1, stride.1, policy)?;
    let origins = ys
        .iter()
        .enumerate()
        .flat_map(|(row, &y)| {
            xs.iter().enumerate().map(move |(col, &x)| TileOrigin { row: row as u32, col: col as u32, x, y })
        })
        .collect();
    Ok(TilePlan { image_id: image_id.to_string(), image_width: width, image_height: height, window, stride, policy, origins })
}

impl TilePlan {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// Window size actually cut at `origin`; smaller than `window` only when the
    /// image is narrower than the window under the clamp policy.
    pub fn tile_size(&self) -> (u32, u32) {
        (self.window.0.min(self.image_width), self.window.1.min(self.image_height))
    }

    pub fn tile_rect(&self, origin: &TileOrigin) -> BBox {
        let (w, h) = self.tile_size();
        BBox { x1: origin.x as f64, y1: origin.y as f64, x2: (origin.x + w) as f64, y2: (origin.y + h) as f64 }
    }

    pub fn tile_name(&self, origin: &TileOrigin) -> String {
        tile_name(&self.image_id, origin)
    }

    /// Looks up the origin of a tile by its file stem.
    pub fn origin_for(&self, tile_stem: &str) -> Option<TileOrigin> {
        self.origins.iter().copied().find(|o| self.tile_name(o) == tile_stem)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `{image_id}_r{row}_c{col}`; callers append the extension.
pub fn tile_name(image_id: &str, origin: &TileOrigin) -> String {
    format!("{image_id}_r{}_c{}", origin.row, origin.col)
}

/// Clips ground truth to one tile and moves it into tile-local coordinates.
///
/// A box survives if it shares positive area with the tile and the visible
/// fraction of its area is at least `min_visibility`. Zero-area boxes never
/// survive.
pub fn remap_annotations(anns: &[Annotation], tile: &BBox, min_visibility: f64) -> Result<Vec<Annotation>> {
    if !(0.0..=1.0).contains(&min_visibility) {
        return Err(Error::InvalidArgument(format!("min_visibility {min_visibility} outside [0, 1]")));
    }
    Ok(anns
        .iter()
        .filter_map(|a| {
            let area = a.bbox.area();
            if area <= 0.0 {
                return None;
            }
            let clipped = a.bbox.intersection(tile)?;
            (clipped.area() / area >= min_visibility)
                .then(|| Annotation { bbox: clipped.translate(-tile.x1, -tile.y1), ..*a })
        })
        .collect())
}

/// Moves tile detections to image coordinates and suppresses overlap-zone
/// duplicates with class-aware NMS. Output is sorted by descending confidence.
pub fn stitch_detections(per_tile: &[(TileOrigin, Vec<Detection>)], nms_iou: f64) -> Result<Vec<Detection>> {
    if !(nms_iou > 0.0 && nms_iou < 1.0) {
        return Err(Error::InvalidArgument(format!("nms_iou {nms_iou} outside (0, 1)")));
    }
    let global: Vec<Detection> = per_tile
        .iter()
        .flat_map(|(o, dets)| {
            let (dx, dy) = (o.x as f64, o.y as f64);
            dets.iter().map(move |d| Detection { bbox: d.bbox.translate(dx, dy), ..*d })
        })
        .collect();
    Ok(nms(&global, nms_iou, false))
}

pub fn crop_tile(image: &Raster, x: u32, y: u32, window: (u32, u32)) -> Result<Raster> {
    let (w, h) = window;
    let fits = x.checked_add(w).is_some_and(|r| r <= image.width()) && y.checked_add(h).is_some_and(|b| b <= image.height());
    if !fits || w == 0 || h == 0 {
        return Err(Error::TileOutOfBounds { x, y, w, h, img_w: image.width(), img_h: image.height() });
    }
    let c = image.channels() as usize;
    let mut data = Vec::with_capacity(w as usize * h as usize * c);
    for row in y..y + h {
        let r = image.row(row);
        data.extend_from_slice(&r[x as usize * c..(x + w) as usize * c]);
    }
    Raster::from_raw(w, h, image.channels(), data)
}
