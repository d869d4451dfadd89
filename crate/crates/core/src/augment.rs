//! Offline augmentation for class balancing.
//!
//! Transforms are deterministic functions of `(raster, annotations, spec)`;
//! all randomness is drawn when a plan is generated. Photometric ops touch
//! colour channels only and leave an alpha channel as is. Areas uncovered by
//! rotation, translation or cutout are filled with gray 114.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Annotation, BBox};
use crate::raster::Raster;

pub const FILL: u8 = 114;

/// Boxes that keep less than this fraction of their pre-clip area are dropped.
pub const MIN_RESIDUAL: f64 = 0.1;

pub const ILLUMINATION_RANGE: (f64, f64) = (0.35, 1.0);

/// One concrete transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentSpec {
    /// Counter-clockwise on screen is negative; 90 sends the top-left corner to the top-right.
    Rotate { angle: f64 },
    Translate { dx: i64, dy: i64 },
    Brightness { gain: f64 },
    Noise { sigma: f64, seed: u64 },
    Hflip,
    Vflip,
    /// Half-open pixel rectangle.
    Cutout { x1: u32, y1: u32, x2: u32, y2: u32 },
    Illumination { w: f64 },
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match *self {
            AugmentSpec::Rotate { angle } if !angle.is_finite() => bad(format!("rotation angle {angle} is not finite")),
            AugmentSpec::Brightness { gain } if !(gain > 0.0 && gain.is_finite()) => bad(format!("brightness gain {gain} must be positive")),
            AugmentSpec::Noise { sigma, .. } if !(sigma >= 0.0 && sigma.is_finite()) => bad(format!("noise sigma {sigma} must be >= 0")),
            AugmentSpec::Illumination { w } => check_weight(w),
            AugmentSpec::Cutout { x1, y1, x2, y2 } if x1 >= x2 || y1 >= y2 => {
                bad(format!("empty cutout rectangle ({x1},{y1})-({x2},{y2})"))
            }
            _ => Ok(()),
        }
    }
}

fn check_weight(w: f64) -> Result<()> {
    let (lo, hi) = ILLUMINATION_RANGE;
    if !(lo..=hi).contains(&w) {
        return Err(Error::InvalidArgument(format!("illumination weight {w} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn color_channels(img: &Raster) -> usize {
    if img.channels() == 4 {
        3
    } else {
        img.channels() as usize
    }
}

fn map_colors(img: &Raster, mut f: impl FnMut(u8) -> f64) -> Raster {
    let mut out = img.clone();
    let (ch, cc) = (img.channels() as usize, color_channels(img));
    for px in out.data_mut().chunks_exact_mut(ch) {
        for v in &mut px[..cc] {
            *v = f(*v).round_ties_even().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// `out = in * w + 255 * (1 - w)`, rounded half to even.
pub fn illumination(img: &Raster, w: f64) -> Result<Raster> {
    check_weight(w)?;
    if w == 1.0 {
        return Ok(img.clone());
    }
    let lift = 255.0 * (1.0 - w);
    Ok(map_colors(img, |v| v as f64 * w + lift))
}

pub fn brightness(img: &Raster, gain: f64) -> Result<Raster> {
    AugmentSpec::Brightness { gain }.validate()?;
    Ok(map_colors(img, |v| v as f64 * gain))
}

/// Additive zero-mean Gaussian noise drawn from a ChaCha8 stream seeded with `seed`.
pub fn noise(img: &Raster, sigma: f64, seed: u64) -> Result<Raster> {
    AugmentSpec::Noise { sigma, seed }.validate()?;
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(map_colors(img, |v| v as f64 + normal.sample(&mut rng)))
}

pub fn cutout(img: &Raster, x1: u32, y1: u32, x2: u32, y2: u32) -> Result<Raster> {
    AugmentSpec::Cutout { x1, y1, x2, y2 }.validate()?;
    if x2 > img.width() || y2 > img.height() {
        return Err(Error::InvalidArgument(format!(
            "cutout ({x1},{y1})-({x2},{y2}) outside {}x{} canvas",
            img.width(),
            img.height()
        )));
    }
    let mut out = img.clone();
    let cc = color_channels(img);
    for y in y1..y2 {
        for x in x1..x2 {
            out.pixel_mut(x, y)[..cc].fill(FILL);
        }
    }
    Ok(out)
}

/// Output pixel `(x, y)` is read from `src(x, y)`, or filled when that is `None`
/// or outside the canvas.
fn resample(img: &Raster, src: impl Fn(u32, u32) -> Option<(i64, i64)>) -> Raster {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let cc = color_channels(img);
    for y in 0..h {
        for x in 0..w {
            let px = out.pixel_mut(x, y);
            match src(x, y) {
                Some((sx, sy)) if (0..w as i64).contains(&sx) && (0..h as i64).contains(&sy) => {
                    px.copy_from_slice(img.pixel(sx as u32, sy as u32));
                }
                _ => px[..cc].fill(FILL),
            }
        }
    }
    out
}

/// Hull, clip and the residual-area drop rule shared by the geometric ops.
fn settle(anns: &[Annotation], w: f64, h: f64, f: impl Fn(&BBox) -> BBox) -> Vec<Annotation> {
    anns.iter()
        .filter_map(|a| {
            let moved = f(&a.bbox);
            let clipped = moved.clip(w, h);
            let keep = !clipped.is_degenerate() && clipped.area() >= MIN_RESIDUAL * moved.area();
            keep.then_some(Annotation { bbox: clipped, ..*a })
        })
        .collect()
}

pub fn hflip(img: &Raster, anns: &[Annotation]) -> (Raster, Vec<Annotation>) {
    let (w, h) = (img.width(), img.height());
    let out = resample(img, |x, y| Some(((w - 1 - x) as i64, y as i64)));
    let wf = w as f64;
    let boxes = settle(anns, wf, h as f64, |b| BBox { x1: wf - b.x2, y1: b.y1, x2: wf - b.x1, y2: b.y2 });
    (out, boxes)
}

pub fn vflip(img: &Raster, anns: &[Annotation]) -> (Raster, Vec<Annotation>) {
    let (w, h) = (img.width(), img.height());
    let out = resample(img, |x, y| Some((x as i64, (h - 1 - y) as i64)));
    let hf = h as f64;
    let boxes = settle(anns, w as f64, hf, |b| BBox { x1: b.x1, y1: hf - b.y2, x2: b.x2, y2: hf - b.y1 });
    (out, boxes)
}

pub fn translate(img: &Raster, anns: &[Annotation], dx: i64, dy: i64) -> (Raster, Vec<Annotation>) {
    let out = resample(img, |x, y| Some((x as i64 - dx, y as i64 - dy)));
    let (fx, fy) = (dx as f64, dy as f64);
    let boxes = settle(anns, img.width() as f64, img.height() as f64, |b| b.translate(fx, fy));
    (out, boxes)
}

/// `(cos, sin)` with exact values at multiples of 90 degrees.
fn cos_sin(angle: f64) -> (f64, f64) {
    let a = angle.rem_euclid(360.0);
    match a {
        0.0 => (1.0, 0.0),
        90.0 => (0.0, 1.0),
        180.0 => (-1.0, 0.0),
        270.0 => (0.0, -1.0),
        _ => {
            let r = a.to_radians();
            (r.cos(), r.sin())
        }
    }
}

/// Same-size nearest-neighbour rotation about the canvas centre.
///
/// In image coordinates (y down) an offset `(dx, dy)` from the centre moves to
/// `(dx cos - dy sin, dx sin + dy cos)`. Boxes become the hull of their four
/// rotated corners.
pub fn rotate(img: &Raster, anns: &[Annotation], angle: f64) -> Result<(Raster, Vec<Annotation>)> {
    AugmentSpec::Rotate { angle }.validate()?;
    let (w, h) = (img.width() as f64, img.height() as f64);
    let (cx, cy) = (w / 2.0, h / 2.0);
    let (c, s) = cos_sin(angle);
    let out = resample(img, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let sx = dx * c + dy * s + cx;
        let sy = -dx * s + dy * c + cy;
        Some((sx.floor() as i64, sy.floor() as i64))
    });
    let boxes = settle(anns, w, h, |b| {
        let pts = [(b.x1, b.y1), (b.x2, b.y1), (b.x1, b.y2), (b.x2, b.y2)].map(|(x, y)| {
            let (dx, dy) = (x - cx, y - cy);
            (dx * c - dy * s + cx, dx * s + dy * c + cy)
        });
        let fold = |f: fn(f64, f64) -> f64, sel: fn(&(f64, f64)) -> f64| pts.iter().map(sel).reduce(f).expect("four corners");
        BBox {
            x1: fold(f64::min, |p| p.0),
            y1: fold(f64::min, |p| p.1),
            x2: fold(f64::max, |p| p.0),
            y2: fold(f64::max, |p| p.1),
        }
    });
    Ok((out, boxes))
}

/// Runs one spec. Photometric ops return the annotations unchanged.
pub fn apply_spec(img: &Raster, anns: &[Annotation], spec: &AugmentSpec) -> Result<(Raster, Vec<Annotation>)> {
    spec.validate()?;
    let keep = || anns.to_vec();
    Ok(match *spec {
        AugmentSpec::Rotate { angle } => rotate(img, anns, angle)?,
        AugmentSpec::Translate { dx, dy } => translate(img, anns, dx, dy),
        AugmentSpec::Brightness { gain } => (brightness(img, gain)?, keep()),
        AugmentSpec::Noise { sigma, seed } => (noise(img, sigma, seed)?, keep()),
        AugmentSpec::Hflip => hflip(img, anns),
        AugmentSpec::Vflip => vflip(img, anns),
        AugmentSpec::Cutout { x1, y1, x2, y2 } => (cutout(img, x1, y1, x2, y2)?, keep()),
        AugmentSpec::Illumination { w } => (illumination(img, w)?, keep()),
    })
}

/// An image that can seed augmentations for a class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceImage {
    pub id: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OversampleOptions {
    pub target: usize,
    pub seed: u64,
    /// When false, a class already above `target` is an error; when true it is left alone.
    pub allow_downsample: bool,
}

impl Default for OversampleOptions {
    fn default() -> Self {
        OversampleOptions { target: 250, seed: 0, allow_downsample: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    /// Class this augmentation is counted towards.
    pub class: String,
    pub source: String,
    /// Per-source counter, starting at 0.
    pub n: usize,
    pub spec: AugmentSpec,
}

impl PlanEntry {
    /// File stem of the augmented image, `{source}_aug{n}`.
    pub fn output_stem(&self) -> String {
        format!("{}_aug{}", self.source, self.n)
    }
}

fn sample_spec(rng: &mut ChaCha8Rng, src: &SourceImage) -> AugmentSpec {
    let round2 = |v: f64| (v * 100.0).round() / 100.0;
    match rng.random_range(0..8) {
        0 => AugmentSpec::Rotate { angle: round2(rng.random_range(-30.0..=30.0)) },
        1 => {
            let (mx, my) = ((src.width / 10).max(1) as i64, (src.height / 10).max(1) as i64);
            AugmentSpec::Translate { dx: rng.random_range(-mx..=mx), dy: rng.random_range(-my..=my) }
        }
        2 => AugmentSpec::Brightness { gain: round2(rng.random_range(0.6..=1.4)) },
        3 => AugmentSpec::Noise { sigma: round2(rng.random_range(2.0..=12.0)), seed: rng.random() },
        4 => AugmentSpec::Hflip,
        5 => AugmentSpec::Vflip,
        6 => {
            let cw = (src.width / 8).max(1);
            let ch = (src.height / 8).max(1);
            let x1 = rng.random_range(0..=src.width - cw);
            let y1 = rng.random_range(0..=src.height - ch);
            AugmentSpec::Cutout { x1, y1, x2: x1 + cw, y2: y1 + ch }
        }
        _ => AugmentSpec::Illumination { w: round2(rng.random_range(ILLUMINATION_RANGE.0..=ILLUMINATION_RANGE.1)) },
    }
}

/// Plans augmentations that lift every class to `opts.target` images.
///
/// `class_images` maps each class to the images containing it. Sources are
/// drawn with replacement. Classes are visited in key order so the plan is a
/// pure function of the inputs and the seed.
pub fn oversample_plan(class_images: &BTreeMap<String, Vec<SourceImage>>, opts: &OversampleOptions) -> Result<Vec<PlanEntry>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut per_source: BTreeMap<String, usize> = BTreeMap::new();
    let mut plan = Vec::new();
    for (class, sources) in class_images {
        if sources.is_empty() {
            return Err(Error::EmptyClass(class.clone()));
        }
        let have = sources.len();
        if have > opts.target && !opts.allow_downsample {
            return Err(Error::InvalidArgument(format!(
                "class {class} already has {have} images, above target {}",
                opts.target
            )));
        }
        for _ in have..opts.target.max(have) {
            let src = &sources[rng.random_range(0..have)];
            if src.width == 0 || src.height == 0 {
                return Err(Error::InvalidArgument(format!("source image {} has zero size", src.id)));
            }
            let spec = sample_spec(&mut rng, src);
            let n = per_source.entry(src.id.clone()).or_insert(0);
            plan.push(PlanEntry { class: class.clone(), source: src.id.clone(), n: *n, spec });
            *n += 1;
        }
    }
    Ok(plan)
}

pub fn plan_to_jsonl(plan: &[PlanEntry]) -> Result<String> {
    let mut out = String::new();
    for e in plan {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn plan_from_jsonl(text: &str) -> Result<Vec<PlanEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn ann(x1: f64, y1: f64, x2: f64, y2: f64) -> Annotation {
        Annotation::human(0, BBox::new(x1, y1, x2, y2).unwrap())
    }

    fn noisy(w: u32, h: u32, seed: u64) -> Raster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * 3).map(|_| rng.random()).collect();
        Raster::from_raw(w, h, 3, data).unwrap()
    }

    #[test]
    fn illumination_examples() {
        let img = noisy(17, 9, 1);
        assert_eq!(illumination(&img, 1.0).unwrap(), img);
        let zero = Raster::filled(4, 4, 3, 0);
        assert!(illumination(&zero, 0.35).unwrap().data().iter().all(|&v| v == 166));
        let white = Raster::filled(4, 4, 1, 255);
        assert!(illumination(&white, 0.5).unwrap().data().iter().all(|&v| v == 255));
        assert!(illumination(&img, 0.3).is_err());
        assert!(illumination(&img, 1.01).is_err());
    }

    #[test]
    fn illumination_rounds_half_to_even() {
        // 1 * 0.5 + 127.5 = 128.0; 0 * 0.5 + 127.5 = 127.5 -> 128; 2 * 0.5 + 127.5 = 128.5 -> 128
        let img = Raster::from_raw(3, 1, 1, vec![0, 1, 2]).unwrap();
        assert_eq!(illumination(&img, 0.5).unwrap().data(), &[128, 128, 128]);
    }

    #[test]
    fn alpha_is_untouched() {
        let img = Raster::from_raw(1, 1, 4, vec![0, 0, 0, 7]).unwrap();
        assert_eq!(illumination(&img, 0.35).unwrap().data(), &[166, 166, 166, 7]);
        assert_eq!(cutout(&img, 0, 0, 1, 1).unwrap().data(), &[FILL, FILL, FILL, 7]);
    }

    #[test]
    fn hflip_examples() {
        let img = noisy(100, 40, 2);
        let (out, boxes) = hflip(&img, &[ann(0.0, 0.0, 10.0, 10.0), ann(45.0, 5.0, 55.0, 9.0)]);
        assert_eq!(boxes[0].bbox, BBox::new(90.0, 0.0, 100.0, 10.0).unwrap());
        assert_eq!(boxes[1].bbox, BBox::new(45.0, 5.0, 55.0, 9.0).unwrap());
        assert_eq!(out.pixel(0, 3), img.pixel(99, 3));
        let (back, again) = hflip(&out, &boxes);
        assert_eq!(back, img);
        assert_eq!(again[0].bbox, BBox::new(0.0, 0.0, 10.0, 10.0).unwrap());
    }

    #[test]
    fn rotate_examples() {
        let img = noisy(100, 100, 3);
        let boxes = [ann(0.0, 0.0, 10.0, 20.0)];
        let (same, b0) = rotate(&img, &boxes, 0.0).unwrap();
        assert_eq!(same, img);
        assert_eq!(b0, boxes);

        let (_, b90) = rotate(&img, &boxes, 90.0).unwrap();
        assert_eq!(b90[0].bbox, BBox::new(80.0, 0.0, 100.0, 10.0).unwrap());

        let odd = noisy(37, 20, 4);
        let obox = [ann(3.0, 2.0, 11.0, 19.0)];
        let (r, rb) = rotate(&odd, &obox, 180.0).unwrap();
        let (h, hb) = hflip(&odd, &obox);
        let (hv, hvb) = vflip(&h, &hb);
        assert_eq!(r, hv);
        assert_eq!(rb, hvb);
    }

    #[test]
    fn rotate_four_quarter_turns_is_identity() {
        let img = noisy(31, 31, 5);
        let mut cur = (img.clone(), vec![ann(2.0, 3.0, 9.0, 20.0)]);
        for _ in 0..4 {
            cur = rotate(&cur.0, &cur.1, 90.0).unwrap();
        }
        assert_eq!(cur.0, img);
        assert_eq!(cur.1, vec![ann(2.0, 3.0, 9.0, 20.0)]);
    }

    #[test]
    fn translate_examples_and_drop_rule() {
        let img = noisy(50, 50, 6);
        let (same, b) = translate(&img, &[ann(0.0, 0.0, 10.0, 10.0)], 0, 0);
        assert_eq!(same, img);
        assert_eq!(b[0].bbox, BBox::new(0.0, 0.0, 10.0, 10.0).unwrap());

        let (out, b) = translate(&img, &[ann(0.0, 0.0, 10.0, 10.0)], 5, 0);
        assert_eq!(b[0].bbox, BBox::new(5.0, 0.0, 15.0, 10.0).unwrap());
        assert_eq!(out.pixel(0, 0), &[FILL; 3]);
        assert_eq!(out.pixel(5, 0), img.pixel(0, 0));

        // shifted right by 5 on a 50 wide canvas: 5 of 10, 1 of 10 (exactly 10%) and 0.5 of 10 columns remain
        let (_, b) = translate(&img, &[ann(40.0, 0.0, 50.0, 10.0), ann(44.0, 0.0, 54.0, 10.0), ann(44.5, 0.0, 54.5, 10.0)], 5, 0);
        assert_eq!(b.iter().map(|a| a.bbox.x1).collect::<Vec<_>>(), vec![45.0, 49.0]);
    }

    #[test]
    fn photometric_identities_and_errors() {
        let img = noisy(8, 8, 7);
        assert_eq!(brightness(&img, 1.0).unwrap(), img);
        assert_eq!(noise(&img, 0.0, 9).unwrap(), img);
        assert!(brightness(&img, 0.0).is_err());
        assert!(noise(&img, -1.0, 0).is_err());
        assert_eq!(noise(&img, 5.0, 9).unwrap(), noise(&img, 5.0, 9).unwrap());
        assert_ne!(noise(&img, 5.0, 9).unwrap(), noise(&img, 5.0, 10).unwrap());
        assert!(brightness(&Raster::filled(2, 2, 1, 200), 2.0).unwrap().data().iter().all(|&v| v == 255));
        assert!(cutout(&img, 0, 0, 9, 4).is_err());
        assert!(cutout(&img, 3, 3, 3, 4).is_err());
        let c = cutout(&img, 2, 2, 4, 4).unwrap();
        assert_eq!(c.pixel(3, 3), &[FILL; 3]);
        assert_eq!(c.pixel(4, 4), img.pixel(4, 4));
    }

    #[test]
    fn spec_json_shape() {
        let s = AugmentSpec::Illumination { w: 0.5 };
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"op":"illumination","w":0.5}"#);
        assert_eq!(serde_json::to_string(&AugmentSpec::Hflip).unwrap(), r#"{"op":"hflip"}"#);
        let back: AugmentSpec = serde_json::from_str(r#"{"op":"translate","dx":-3,"dy":4}"#).unwrap();
        assert_eq!(back, AugmentSpec::Translate { dx: -3, dy: 4 });
        assert!(apply_spec(&Raster::filled(2, 2, 1, 0), &[], &AugmentSpec::Illumination { w: 0.1 }).is_err());
    }

    fn sources(class_counts: &[(&str, usize)]) -> BTreeMap<String, Vec<SourceImage>> {
        class_counts
            .iter()
            .map(|&(c, n)| (c.to_string(), (0..n).map(|i| SourceImage { id: format!("{c}{i:03}"), width: 64, height: 48 }).collect()))
            .collect()
    }

    #[test]
    fn oversample_counts() {
        let opts = OversampleOptions { target: 250, seed: 1, allow_downsample: false };
        let plan = oversample_plan(&sources(&[("cotton", 24)]), &opts).unwrap();
        assert_eq!(plan.len(), 226);
        assert!(plan.iter().all(|e| e.class == "cotton" && e.source.starts_with("cotton")));
        let full = oversample_plan(&sources(&[("a", 250), ("b", 250)]), &opts).unwrap();
        assert!(full.is_empty());
        let err = oversample_plan(&sources(&[("a", 10), ("empty", 0)]), &opts).unwrap_err();
        assert!(matches!(err, Error::EmptyClass(c) if c == "empty"));
        assert!(oversample_plan(&sources(&[("a", 300)]), &opts).is_err());
        let lenient = OversampleOptions { allow_downsample: true, ..opts.clone() };
        assert!(oversample_plan(&sources(&[("a", 300)]), &lenient).unwrap().is_empty());
    }

    #[test]
    fn oversample_is_deterministic_and_names_are_unique() {
        let src = sources(&[("cotton", 24), ("weed", 90), ("corn", 3)]);
        let opts = OversampleOptions { target: 120, seed: 42, allow_downsample: false };
        let a = plan_to_jsonl(&oversample_plan(&src, &opts).unwrap()).unwrap();
        let b = plan_to_jsonl(&oversample_plan(&src, &opts).unwrap()).unwrap();
        assert_eq!(a, b);
        let plan = plan_from_jsonl(&a).unwrap();
        assert_eq!(plan_to_jsonl(&plan).unwrap(), a);
        let stems: std::collections::BTreeSet<_> = plan.iter().map(PlanEntry::output_stem).collect();
        assert_eq!(stems.len(), plan.len());
        for e in &plan {
            e.spec.validate().unwrap();
        }
        let other = plan_to_jsonl(&oversample_plan(&src, &OversampleOptions { seed: 43, ..opts }).unwrap()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn executing_a_plan_reaches_target() {
        let src = sources(&[("cotton", 24), ("weed", 90), ("corn", 3)]);
        let plan = oversample_plan(&src, &OversampleOptions { target: 120, seed: 5, allow_downsample: false }).unwrap();
        let mut counts: BTreeMap<&str, usize> = src.iter().map(|(c, v)| (c.as_str(), v.len())).collect();
        for e in &plan {
            let img = Raster::filled(64, 48, 3, 90);
            apply_spec(&img, &[ann(10.0, 10.0, 30.0, 30.0)], &e.spec).unwrap();
            *counts.get_mut(e.class.as_str()).unwrap() += 1;
        }
        assert!(counts.values().all(|&n| n == 120));
    }

    fn painted(size: u32, boxes: &[(u32, u32, u32, u32)]) -> (Raster, Vec<Annotation>) {
        let mut img = Raster::filled(size, size, 1, 0);
        let mut anns = Vec::new();
        for &(x, y, w, h) in boxes {
            let (x2, y2) = ((x + w).min(size), (y + h).min(size));
            img.fill_rect(x, y, x2, y2, 255);
            anns.push(ann(x as f64, y as f64, x2 as f64, y2 as f64));
        }
        (img, anns)
    }

    fn painted_inside(img: &Raster, anns: &[Annotation]) -> bool {
        (0..img.height()).all(|y| {
            (0..img.width()).all(|x| {
                img.pixel(x, y)[0] != 255
                    || anns.iter().any(|a| {
                        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                        a.bbox.x1 <= px && px <= a.bbox.x2 && a.bbox.y1 <= py && py <= a.bbox.y2
                    })
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn illumination_monotone_in_w(v in 0u8..255, a in 0.35f64..=1.0, b in 0.35f64..=1.0) {
            let img = Raster::filled(1, 1, 1, v);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let at_lo = illumination(&img, lo).unwrap().data()[0];
            let at_hi = illumination(&img, hi).unwrap().data()[0];
            prop_assert!(at_hi <= at_lo);
        }

        #[test]
        fn quarter_turns_and_flips_keep_mass_in_boxes(
            size in 8u32..40,
            raw in prop::collection::vec((0u32..40, 0u32..40, 1u32..12, 1u32..12), 1..5),
            op in 0usize..5,
        ) {
            let boxes: Vec<_> = raw.into_iter().map(|(x, y, w, h)| (x % (size - 1), y % (size - 1), w, h)).collect();
            let (img, anns) = painted(size, &boxes);
            let (out, moved) = match op {
                0 => rotate(&img, &anns, 90.0).unwrap(),
                1 => rotate(&img, &anns, 180.0).unwrap(),
                2 => rotate(&img, &anns, 270.0).unwrap(),
                3 => hflip(&img, &anns),
                _ => vflip(&img, &anns),
            };
            prop_assert_eq!(moved.len(), anns.len());
            prop_assert!(painted_inside(&out, &moved));
            let painted_in = img.data().iter().filter(|&&v| v == 255).count();
            let painted_out = out.data().iter().filter(|&&v| v == 255).count();
            prop_assert_eq!(painted_in, painted_out);
        }

        #[test]
        fn outputs_stay_on_canvas(
            seed in any::<u64>(),
            w in 4u32..48, h in 4u32..48,
            raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.05f64..1.0, 0.05f64..1.0), 0..6),
        ) {
            let src = SourceImage { id: "s".into(), width: w, height: h };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = sample_spec(&mut rng, &src);
            let anns: Vec<_> = raw.iter().map(|&(x, y, bw, bh)| {
                let x1 = x * w as f64 * 0.9;
                let y1 = y * h as f64 * 0.9;
                ann(x1, y1, (x1 + bw * w as f64).min(w as f64), (y1 + bh * h as f64).min(h as f64))
            }).collect();
            let img = noisy(w, h, seed);
            let (out, moved) = apply_spec(&img, &anns, &spec).unwrap();
            prop_assert_eq!((out.width(), out.height()), (w, h));
            for a in &moved {
                prop_assert!(a.bbox.x1 >= 0.0 && a.bbox.y1 >= 0.0 && a.bbox.x2 <= w as f64 && a.bbox.y2 <= h as f64);
                prop_assert!(!a.bbox.is_degenerate());
            }
        }
    }
}
