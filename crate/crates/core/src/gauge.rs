//! Scale ROI, level indicator and the full read pipeline.
//!
//! [`read_scale`] runs: resize, ROI, two-pass orientation, flip check,
//! crop to the ticks, marker grouping, label OCR, calibration, indicator
//! extraction and evaluation of the fitted relation at the indicator.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::calib::{self, CalibError, Calibration, LinearRelation, MarkerReading, PairSlope};
use crate::config::{Config, OcrEngine};
use crate::contour::{self, BBox, BinaryMask, Bounds, ColorRange, Contour};
use crate::digits::{self, GlyphSet, OcrError, OcrResult, Side};
use crate::marker::{self, MarkerError, MarkerPosition};
use crate::orient::{self, OrientError};
use crate::raster::{self, Angle, HsvImage, RasterError, RasterImage, Rect};

/// How the liquid level shows up in the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IndicatorKind {
    /// Curved liquid surface; its lowest point is read.
    Meniscus,
    /// Plunger seal; read at `offset_frac` of its height below its top.
    Plunger { offset_frac: f64 },
}

impl IndicatorKind {
    pub const DEFAULT_PLUNGER_OFFSET: f64 = 0.15;

    pub fn plunger() -> Self {
        IndicatorKind::Plunger {
            offset_frac: Self::DEFAULT_PLUNGER_OFFSET,
        }
    }

    pub fn is_valid(&self) -> bool {
        match *self {
            IndicatorKind::Meniscus => true,
            IndicatorKind::Plunger { offset_frac } => (0.0..=0.5).contains(&offset_frac),
        }
    }
}

/// Vertical pixel coordinate at which the indicator is read.
pub fn measurement_point(ind: &Contour, kind: IndicatorKind) -> f64 {
    match kind {
        IndicatorKind::Meniscus => ind.points.iter().map(|p| p.y).max().unwrap_or(ind.bbox.y_max) as f64,
        IndicatorKind::Plunger { offset_frac } => {
            let b = ind.bbox;
            b.y_min as f64 + offset_frac * (b.y_max - b.y_min) as f64
        }
    }
}

/// Class name of scale boxes in a detection sidecar.
pub const SCALE_CLASS: &str = "linear_scale";

/// One detector box, in pixels of the original image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: String,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    #[serde(default = "full_confidence")]
    pub confidence: f64,
}

fn full_confidence() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Sidecar {
    pub detections: Vec<Detection>,
}

impl Sidecar {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn first_scale(&self) -> Option<&Detection> {
        self.detections.iter().find(|d| d.class == SCALE_CLASS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoiSource {
    Sidecar,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub rect: Rect,
    pub source: RoiSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Detection,
    Orientation,
    Markers,
    Calibration,
    Indicator,
}

impl Stage {
    /// Process exit code reported for a failure in this stage.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Detection => 10,
            Stage::Orientation => 11,
            Stage::Markers => 12,
            Stage::Calibration => 13,
            Stage::Indicator => 14,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Detection => "detection",
            Stage::Orientation => "orientation",
            Stage::Markers => "markers",
            Stage::Calibration => "calibration",
            Stage::Indicator => "indicator",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error("detection: no scale found in the image")]
    NoDetection,
    #[error("detection: unusable image: {0}")]
    BadImage(#[from] RasterError),
    #[error("orientation: {0}")]
    Orientation(#[from] OrientError),
    #[error("markers: {0}")]
    Markers(#[from] MarkerError),
    #[error("markers: found {0} major marker(s), need at least 2")]
    TooFewMajors(usize),
    #[error("calibration: {0}")]
    Calibration(#[from] CalibError),
    #[error("calibration: OCR adapter failed: {0}")]
    Ocr(#[from] OcrError),
    #[error("indicator: no indicator contour within the area bounds")]
    IndicatorNotFound,
}

impl ReadError {
    pub fn stage(&self) -> Stage {
        match self {
            ReadError::NoDetection | ReadError::BadImage(_) => Stage::Detection,
            ReadError::Orientation(_) => Stage::Orientation,
            ReadError::Markers(_) | ReadError::TooFewMajors(_) => Stage::Markers,
            ReadError::Calibration(_) | ReadError::Ocr(_) => Stage::Calibration,
            ReadError::IndicatorNotFound => Stage::Indicator,
        }
    }
}

/// Bounding box of the largest cluster of `mask` pixels. Pixels whose grid
/// cells lie within `LINK_FRACTION` of the longest image edge of each other
/// belong to the same cluster.
fn largest_cluster_bbox(mask: &BinaryMask) -> Option<(u32, u32, u32, u32)> {
    const LINK_FRACTION: f64 = 0.05;
    let (w, h) = (mask.width(), mask.height());
    let cell = (w.max(h) / 100).max(2);
    let reach = ((LINK_FRACTION * w.max(h) as f64 / cell as f64).ceil() as i64).max(2);
    let (gw, gh) = (w.div_ceil(cell), h.div_ceil(cell));
    let mut counts = vec![0usize; (gw * gh) as usize];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                counts[((y / cell) * gw + x / cell) as usize] += 1;
            }
        }
    }
    let mut label = vec![0u32; counts.len()];
    let mut best: Option<(usize, u32)> = None;
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..counts.len() {
        if counts[start] == 0 || label[start] != 0 {
            continue;
        }
        next += 1;
        label[start] = next;
        stack.push(start);
        let mut total = 0;
        while let Some(i) = stack.pop() {
            total += counts[i];
            let (cx, cy) = ((i as u32 % gw) as i64, (i as u32 / gw) as i64);
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= gw as i64 || ny >= gh as i64 {
                        continue;
                    }
                    let j = (ny as u32 * gw + nx as u32) as usize;
                    if counts[j] > 0 && label[j] == 0 {
                        label[j] = next;
                        stack.push(j);
                    }
                }
            }
        }
        if best.is_none_or(|b| total > b.0) {
            best = Some((total, next));
        }
    }
    let (total, id) = best?;
    if total < 10 {
        return None;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) && label[((y / cell) * gw + x / cell) as usize] == id {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    Some((x0, y0, x1, y1))
}

/// Scale region: the sidecar's first scale box when present, otherwise the
/// marker-colored cluster grown by `dilation` of its size.
pub fn locate_roi(
    img: &RasterImage,
    sidecar: Option<&Sidecar>,
    marker_range: &ColorRange,
    dilation: f64,
) -> Result<Roi, ReadError> {
    let (w, h) = (img.width(), img.height());
    if let Some(d) = sidecar.and_then(Sidecar::first_scale) {
        if let Some(rect) = Rect::clamped(
            d.x.floor() as i64,
            d.y.floor() as i64,
            (d.x + d.w).ceil() as i64,
            (d.y + d.h).ceil() as i64,
            w,
            h,
        ) {
            return Ok(Roi {
                rect,
                source: RoiSource::Sidecar,
            });
        }
    }
    let hsv = raster::to_hsv(&img.to_rgb())?;
    let mask = contour::segment_by_range(&hsv, marker_range);
    let (x0, y0, x1, y1) = largest_cluster_bbox(&mask).ok_or(ReadError::NoDetection)?;
    let gx = ((x1 - x0 + 1) as f64 * dilation / 2.0).round() as i64;
    let gy = ((y1 - y0 + 1) as f64 * dilation / 2.0).round() as i64;
    let rect = Rect::clamped(
        x0 as i64 - gx,
        y0 as i64 - gy,
        x1 as i64 + 1 + gx,
        y1 as i64 + 1 + gy,
        w,
        h,
    )
    .ok_or(ReadError::NoDetection)?;
    Ok(Roi {
        rect,
        source: RoiSource::Heuristic,
    })
}

/// Largest contour of `range` whose area and perimeter fall in bounds.
pub fn extract_indicator(
    hsv: &HsvImage,
    range: &ColorRange,
    area: Bounds,
    perimeter: Bounds,
) -> Result<Contour, ReadError> {
    let mask = contour::segment_by_range(hsv, range);
    let cs = contour::filter_by_bounds(&contour::find_contours(&mask), area, perimeter);
    let mut best: Option<Contour> = None;
    for c in cs {
        if best.as_ref().is_none_or(|b| c.area > b.area) {
            best = Some(c);
        }
    }
    best.ok_or(ReadError::IndicatorNotFound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    Low,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrOutcome {
    pub position: f64,
    pub raw_text: String,
    pub value: Option<f64>,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per-stage record of one read, filled as far as the pipeline got.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub input_size: (u32, u32),
    pub resize_scale: f64,
    pub roi: Option<Roi>,
    pub orient_contours: usize,
    pub coarse_angle: Option<Angle>,
    pub fine_angle: Option<Angle>,
    /// Total on-screen counter-clockwise rotation applied, flip included.
    pub rotation: Option<Angle>,
    pub flipped: bool,
    pub flip_scores: Option<(usize, usize)>,
    pub contours: usize,
    pub linear_contours: usize,
    /// Member counts of the length groups, longest group first.
    pub group_sizes: Vec<usize>,
    pub majors: Vec<MarkerPosition>,
    pub spacing: Option<f64>,
    pub label_side: Option<Side>,
    pub ocr: Vec<OcrOutcome>,
    pub slopes: Vec<PairSlope>,
    pub consensus_slope: Option<f64>,
    pub rejected: Vec<usize>,
    pub grain: Option<f64>,
    pub indicator_bbox: Option<BBox>,
    pub indicator_area: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub value: f64,
    pub relation: LinearRelation,
    /// Measurement row in the oriented scale crop.
    pub indicator_y: f64,
    /// Corrected major markers.
    pub markers: Vec<MarkerReading>,
    pub confidence: Confidence,
    pub diagnostics: Diagnostics,
}

/// Collects diagnostics and, when enabled, intermediate images.
#[derive(Debug, Default)]
pub struct Trace {
    pub diagnostics: Diagnostics,
    pub images: Option<Vec<(String, RasterImage)>>,
}

impl Trace {
    pub fn with_images() -> Self {
        Self {
            diagnostics: Diagnostics::default(),
            images: Some(Vec::new()),
        }
    }

    fn image(&mut self, name: &str, f: impl FnOnce() -> RasterImage) {
        if let Some(v) = self.images.as_mut() {
            v.push((name.to_string(), f()));
        }
    }
}

/// Marker and label analysis of one oriented scale crop.
#[derive(Debug, Clone)]
struct Scan {
    contours: usize,
    linear: usize,
    group_sizes: Vec<usize>,
    majors: Vec<MarkerPosition>,
    minors: Vec<MarkerPosition>,
    spacing: f64,
    side: Side,
    rois: Vec<Option<Rect>>,
    ocr: Vec<OcrResult>,
}

impl Scan {
    fn reads(&self) -> usize {
        self.ocr.iter().filter(|o| o.value.is_some()).count()
    }
}

struct Ocr<'a> {
    cfg: &'a Config,
    glyphs: GlyphSet,
}

impl Ocr<'_> {
    fn read(&self, roi: &RasterImage) -> Result<OcrResult, OcrError> {
        match self.cfg.ocr_engine {
            OcrEngine::Builtin => Ok(digits::recognize_with_threshold(
                roi,
                &self.glyphs,
                self.cfg.template_accept,
            )),
            OcrEngine::External => match digits::run_external_ocr(roi, &self.cfg.adapter()) {
                Err(OcrError::AdapterTimeout(t)) => Ok(OcrResult {
                    error: Some(format!("adapter timed out after {t:?}")),
                    ..OcrResult::default()
                }),
                other => other,
            },
        }
    }
}

fn scan_markers(crop: &RasterImage, hsv: &HsvImage, cfg: &Config, ocr: &Ocr) -> Result<Scan, ReadError> {
    let mask = contour::segment_by_range(hsv, &cfg.marker_range()).closed();
    let all = contour::find_contours(&mask);
    let linear = marker::aligned_column(&contour::filter_linear(&all, cfg.aspect_threshold));
    let groups = marker::group_by_relative_length(&linear, cfg.group_jump)?;
    let majors = marker::major_markers(&groups);
    if majors.len() < 2 {
        return Err(ReadError::TooFewMajors(majors.len()));
    }
    let minors = groups
        .get(1)
        .map(|g| g.members.iter().map(MarkerPosition::of).collect())
        .unwrap_or_default();
    let spacing = marker::median_spacing(&majors).expect("two or more majors");
    let props = cfg.roi_proportions();
    let side = digits::choose_label_side(hsv, &majors, spacing, &cfg.marker_range(), props);
    let mut rois = Vec::with_capacity(majors.len());
    let mut results = Vec::with_capacity(majors.len());
    for m in &majors {
        let roi = digits::digit_roi(m, spacing, side, (crop.width(), crop.height()), props);
        let res = match roi {
            Some(r) => ocr.read(&raster::crop(crop, r.rect)?)?,
            None => OcrResult::default(),
        };
        rois.push(roi.map(|r| r.rect));
        results.push(res);
    }
    Ok(Scan {
        contours: all.len(),
        linear: linear.len(),
        group_sizes: groups.iter().map(|g| g.members.len()).collect(),
        majors,
        minors,
        spacing,
        side,
        rois,
        ocr: results,
    })
}

/// Contours of `range` with at least `min_area` pixels.
fn marker_contours(img: &RasterImage, range: &ColorRange, min_area: f64) -> Result<Vec<Contour>, ReadError> {
    let hsv = raster::to_hsv(img)?;
    let mask = contour::segment_by_range(&hsv, range);
    Ok(contour::find_contours(&mask)
        .into_iter()
        .filter(|c| c.area >= min_area)
        .collect())
}

/// Upper bound on fine orientation passes.
const FINE_PASSES: usize = 3;
/// A fine correction below this many degrees ends the refinement.
const FINE_SETTLED_DEG: f64 = 0.1;

pub fn read_scale(img: &RasterImage, cfg: &Config, sidecar: Option<&Sidecar>) -> Result<Reading, ReadError> {
    read_scale_traced(img, cfg, sidecar, &mut Trace::default())
}

pub fn read_scale_traced(
    img: &RasterImage,
    cfg: &Config,
    sidecar: Option<&Sidecar>,
    trace: &mut Trace,
) -> Result<Reading, ReadError> {
    let marker_range = cfg.marker_range();
    let d = &mut trace.diagnostics;
    d.input_size = (img.width(), img.height());

    // resize
    let img = img.to_rgb();
    let resized = raster::resize_longest_edge(&img, cfg.resize_target)?;
    let k = resized.width() as f64 / img.width() as f64;
    d.resize_scale = k;

    // ROI, with sidecar boxes moved into the resized frame
    let scaled_sidecar = sidecar.map(|s| Sidecar {
        detections: s
            .detections
            .iter()
            .map(|det| Detection {
                x: det.x * k,
                y: det.y * k,
                w: det.w * k,
                h: det.h * k,
                ..det.clone()
            })
            .collect(),
    });
    let roi = locate_roi(&resized, scaled_sidecar.as_ref(), &marker_range, cfg.roi_dilation)?;
    d.roi = Some(roi);
    let work = raster::crop(&resized, roi.rect)?;
    trace.image("01_roi", || work.clone());

    // two-pass orientation, applied as one rotation of the crop
    let all = marker_contours(&work, &marker_range, 4.0)?;
    trace.diagnostics.orient_contours = all.len();
    let coarse = orient::reorient(&work, &all)?;
    // refine on the ticks' own directions, re-detected in the rotated frame
    // rather than carried through resampling; repeat while it still moves
    let mut fine = Angle::degrees(0.0);
    let mut frame = coarse.image;
    for _ in 0..FINE_PASSES {
        let found = marker_contours(&frame, &marker_range, 4.0)?;
        let linear = contour::filter_linear(&found, cfg.aspect_threshold);
        let set = if linear.is_empty() { found } else { linear };
        // the ticks run across the scale, so the axis is 90° from their mean
        let across = orient::mean_line_direction(&set)?;
        let step = orient::upright_rotation(Angle::degrees(across.value() + 90.0));
        fine = fine + step;
        if step.value().abs() < FINE_SETTLED_DEG {
            break;
        }
        frame = raster::rotate_about_center(&work, coarse.angle + fine, None).image;
    }
    let total = coarse.angle + fine;
    trace.diagnostics.coarse_angle = Some(coarse.angle);
    trace.diagnostics.fine_angle = Some(fine);
    let upright = raster::rotate_about_center(&work, total, None).image;
    trace.image("02_upright", || upright.clone());

    // crop to the ticks plus room for labels
    let up_linear = contour::filter_linear(&marker_contours(&upright, &marker_range, 4.0)?, cfg.aspect_threshold);
    let major_len = up_linear.iter().map(Contour::length).fold(0.0, f64::max);
    let (crop, _) = orient::crop_to_scale_with_margin(
        &upright,
        &up_linear,
        cfg.pad_fraction,
        cfg.label_margin * major_len,
    )
    .ok_or(ReadError::TooFewMajors(0))?;

    // flip check by label readability
    let ocr = Ocr {
        cfg,
        glyphs: GlyphSet::default(),
    };
    let scans: RefCell<Vec<(RasterImage, HsvImage, Result<Scan, ReadError>)>> = RefCell::new(Vec::new());
    let (_, flipped) = orient::resolve_flip(&crop, |candidate| {
        let hsv = raster::to_hsv(candidate).expect("crop is RGB").blurred();
        let scan = scan_markers(candidate, &hsv, cfg, &ocr);
        let score = scan.as_ref().map_or(0, Scan::reads);
        scans.borrow_mut().push((candidate.clone(), hsv, scan));
        score
    });
    let mut scans = scans.into_inner();
    // resolve_flip scores the input first, then its 180° rotation
    let (crop, hsv, scan) = scans.swap_remove(if flipped { 1 } else { 0 });
    let d = &mut trace.diagnostics;
    d.flipped = flipped;
    d.rotation = Some(if flipped { total + Angle::degrees(180.0) } else { total });
    trace.image("03_scale_crop", || crop.clone());
    trace.image("04_marker_mask", || {
        contour::segment_by_range(&hsv, &marker_range).to_raster()
    });

    let d = &mut trace.diagnostics;
    let scan = scan?;
    d.contours = scan.contours;
    d.linear_contours = scan.linear;
    d.group_sizes = scan.group_sizes.clone();
    d.majors = scan.majors.clone();
    d.spacing = Some(scan.spacing);
    d.label_side = Some(scan.side);
    d.ocr = scan
        .majors
        .iter()
        .zip(&scan.ocr)
        .map(|(m, o)| OcrOutcome {
            position: m.y,
            raw_text: o.raw_text.clone(),
            value: o.value,
            confidence: o.confidence,
            error: o.error.clone(),
        })
        .collect();
    trace.image("05_markers", || overlay_markers(&crop, &scan));

    // calibration
    let readings: Vec<MarkerReading> = scan
        .majors
        .iter()
        .zip(&scan.ocr)
        .map(|(m, o)| MarkerReading::new(m.y, o.value))
        .collect();
    let cal: Calibration = calib::auto_correct(&readings, &cfg.calib_options())?;
    let d = &mut trace.diagnostics;
    d.slopes = cal.slopes.slopes.clone();
    d.consensus_slope = Some(cal.consensus.slope);
    d.rejected = cal.rejected.clone();
    d.grain = Some(cal.grain);

    // indicator
    let ind = extract_indicator(&hsv, &cfg.indicator_range(), cfg.area_bounds(), cfg.perimeter_bounds())?;
    trace.diagnostics.indicator_bbox = Some(ind.bbox);
    trace.diagnostics.indicator_area = Some(ind.area);
    trace.image("06_indicator_mask", || {
        contour::segment_by_range(&hsv, &cfg.indicator_range()).to_raster()
    });
    let y = measurement_point(&ind, cfg.indicator_kind());
    Ok(Reading {
        value: cal.relation.eval(y),
        relation: cal.relation,
        indicator_y: y,
        markers: cal.corrected,
        confidence: if cal.consensus.low_confidence {
            Confidence::Low
        } else {
            Confidence::Normal
        },
        diagnostics: trace.diagnostics.clone(),
    })
}

fn outline(img: &mut RasterImage, r: Rect, color: [u8; 3]) {
    if r.w == 0 || r.h == 0 {
        return;
    }
    for x in r.x..r.right() {
        img.put_rgb(x, r.y, color);
        img.put_rgb(x, r.bottom() - 1, color);
    }
    for y in r.y..r.bottom() {
        img.put_rgb(r.x, y, color);
        img.put_rgb(r.right() - 1, y, color);
    }
}

fn marker_rect(m: &MarkerPosition, w: u32, h: u32) -> Option<Rect> {
    let y = m.y.round() as i64;
    Rect::clamped(m.x_min as i64, y - 1, m.x_max as i64 + 1, y + 2, w, h)
}

/// Majors in red, minors in green, label ROIs in orange.
fn overlay_markers(crop: &RasterImage, scan: &Scan) -> RasterImage {
    let mut img = crop.clone();
    let (w, h) = (img.width(), img.height());
    for m in &scan.minors {
        if let Some(r) = marker_rect(m, w, h) {
            outline(&mut img, r, [0, 180, 0]);
        }
    }
    for m in &scan.majors {
        if let Some(r) = marker_rect(m, w, h) {
            outline(&mut img, r, [220, 0, 0]);
        }
    }
    for r in scan.rois.iter().flatten() {
        outline(&mut img, *r, [255, 140, 0]);
    }
    img
}
