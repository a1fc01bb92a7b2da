//! Reading the printed value beside each major marker.
//!
//! Two engines share one result type: a template matcher over the embedded
//! bitmap font, and an adapter that shells out to an external OCR program.

use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::contour::ColorRange;
use crate::font::{self, Glyph};
use crate::marker::MarkerPosition;
use crate::raster::{io as imgio, HsvImage, RasterImage, Rect};

/// Template correlation needed to accept a character.
pub const DEFAULT_ACCEPT: f64 = 0.8;
/// Minimum gap between Otsu class means; flatter ROIs are blank.
pub const MIN_CONTRAST: f64 = 48.0;
/// Components smaller than this many pixels are treated as noise.
const MIN_COMPONENT_AREA: usize = 3;
/// A glyph needs at least one pixel per font row.
const MIN_GLYPH_HEIGHT: u32 = font::GLYPH_H as u32;
/// Allowed ratio between component and template aspect ratios.
const ASPECT_TOLERANCE: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    #[default]
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiProportions {
    /// ROI width as a multiple of the marker length.
    pub width_factor: f64,
    /// ROI height as a multiple of the major spacing.
    pub height_factor: f64,
}

impl Default for RoiProportions {
    fn default() -> Self {
        Self {
            width_factor: 1.5,
            height_factor: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitRoi {
    pub rect: Rect,
    pub side: Side,
}

/// Label area beside `marker`, abutting its end on `side`, clamped to a
/// `bounds.0` x `bounds.1` image. `None` when the clamp leaves nothing.
pub fn digit_roi(
    marker: &MarkerPosition,
    spacing: f64,
    side: Side,
    bounds: (u32, u32),
    props: RoiProportions,
) -> Option<DigitRoi> {
    if !(spacing > 0.0) {
        return None;
    }
    let w = (props.width_factor * marker.length).round().max(1.0) as i64;
    let h = (props.height_factor * spacing).round().max(1.0) as i64;
    let y0 = (marker.y - (h - 1) as f64 / 2.0).round() as i64;
    let (x0, x1) = match side {
        Side::Right => (marker.x_max as i64 + 1, marker.x_max as i64 + 1 + w),
        Side::Left => (marker.x_min as i64 - w, marker.x_min as i64),
    };
    Rect::clamped(x0, y0, x1, y0 + h, bounds.0, bounds.1).map(|rect| DigitRoi { rect, side })
}

/// Side whose label ROIs hold the larger fraction of `ink` pixels summed
/// over all markers. Ties go right.
pub fn choose_label_side(
    img: &HsvImage,
    markers: &[MarkerPosition],
    spacing: f64,
    ink: &ColorRange,
    props: RoiProportions,
) -> Side {
    let density = |side| {
        let (mut hits, mut area) = (0usize, 0usize);
        for m in markers {
            let Some(roi) = digit_roi(m, spacing, side, (img.width(), img.height()), props) else {
                continue;
            };
            let r = roi.rect;
            area += (r.w * r.h) as usize;
            for y in r.y..r.bottom() {
                for x in r.x..r.right() {
                    hits += ink.contains(img.hsv(x, y)) as usize;
                }
            }
        }
        if area == 0 {
            0.0
        } else {
            hits as f64 / area as f64
        }
    };
    if density(Side::Left) > density(Side::Right) {
        Side::Left
    } else {
        Side::Right
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OcrResult {
    pub raw_text: String,
    /// Present only when `raw_text` parses cleanly.
    pub value: Option<f64>,
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl OcrResult {
    fn from_text(raw_text: String, confidence: f64) -> Self {
        let value = parse_ocr_text(&raw_text);
        Self {
            raw_text,
            confidence: if value.is_some() { confidence } else { 0.0 },
            value,
            error: None,
        }
    }
}

/// Trims whitespace and punctuation at both ends, then accepts digits with
/// at most one interior decimal point.
pub fn parse_ocr_text(s: &str) -> Option<f64> {
    let t = s.trim_matches(|c: char| c.is_whitespace() || c.is_ascii_punctuation());
    if t.is_empty() {
        return None;
    }
    let mut parts = t.splitn(2, '.');
    let int = parts.next()?;
    let frac = parts.next();
    let all_digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int) || frac.is_some_and(|f| !all_digits(f)) {
        return None;
    }
    t.parse().ok()
}

/// Templates for the built-in recognizer.
#[derive(Debug, Clone)]
pub struct GlyphSet {
    glyphs: Vec<&'static Glyph>,
}

impl Default for GlyphSet {
    fn default() -> Self {
        Self {
            glyphs: font::GLYPHS.iter().collect(),
        }
    }
}

impl GlyphSet {
    pub fn only(chars: &str) -> Self {
        Self {
            glyphs: font::GLYPHS.iter().filter(|g| chars.contains(g.ch)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }
}

/// Otsu threshold over a gray histogram. Returns (threshold, dark mean,
/// light mean); pixels `<= threshold` form the dark class.
pub fn otsu(gray: &[u8]) -> Option<(u8, f64, f64)> {
    let mut hist = [0u64; 256];
    for &v in gray {
        hist[v as usize] += 1;
    }
    let total = gray.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best: Option<(f64, u8, f64, f64)> = None;
    for t in 0..255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (m0 - m1).powi(2);
        if best.is_none_or(|b| between > b.0) {
            best = Some((between, t as u8, m0, m1));
        }
    }
    best.map(|(_, t, m0, m1)| (t, m0, m1))
}

struct Component {
    /// Connected-component labels merged into this glyph.
    members: Vec<u32>,
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    area: usize,
}

impl Component {
    fn w(&self) -> u32 {
        self.x1 - self.x0 + 1
    }
    fn h(&self) -> u32 {
        self.y1 - self.y0 + 1
    }
}

fn components(ink: &[bool], w: u32, h: u32) -> (Vec<u32>, Vec<Component>) {
    let (wu, hu) = (w as usize, h as usize);
    let mut labels = vec![0u32; wu * hu];
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for start in 0..wu * hu {
        if !ink[start] || labels[start] != 0 {
            continue;
        }
        let label = out.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut c = Component {
            members: vec![label],
            x0: u32::MAX,
            y0: u32::MAX,
            x1: 0,
            y1: 0,
            area: 0,
        };
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % wu) as u32, (i / wu) as u32);
            c.area += 1;
            c.x0 = c.x0.min(x);
            c.x1 = c.x1.max(x);
            c.y0 = c.y0.min(y);
            c.y1 = c.y1.max(y);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * wu + nx as usize;
                    if ink[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        out.push(c);
    }
    (labels, out)
}

/// Glyphs sit side by side, so pieces sharing a column are one glyph
/// split by thresholding (a diagonal stroke meeting only at a corner).
/// Input is sorted by `x0`.
fn merge_stacked(comps: Vec<Component>) -> Vec<Component> {
    let mut out: Vec<Component> = Vec::with_capacity(comps.len());
    for c in comps {
        match out.last_mut() {
            Some(prev) if c.x0 <= prev.x1 => {
                prev.members.extend(c.members);
                prev.x0 = prev.x0.min(c.x0);
                prev.x1 = prev.x1.max(c.x1);
                prev.y0 = prev.y0.min(c.y0);
                prev.y1 = prev.y1.max(c.y1);
                prev.area += c.area;
            }
            _ => out.push(c),
        }
    }
    out
}

/// Glyph ink coverage resampled onto a `w` x `h` grid spanning its ink box.
fn render_template(g: &Glyph, w: u32, h: u32) -> Vec<f64> {
    let (_, _, gw, gh) = g.ink_box();
    let (sx, sy) = (gw as f64 / w as f64, gh as f64 / h as f64);
    let mut out = Vec::with_capacity((w * h) as usize);
    for v in 0..h {
        for u in 0..w {
            let (x0, y0) = (u as f64 * sx, v as f64 * sy);
            out.push(g.coverage_in_ink_box(x0, y0, x0 + sx, y0 + sy));
        }
    }
    out
}

fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Reads dark characters on a light background.
///
/// The ROI is binarized at the Otsu threshold; each 8-connected dark
/// component, left to right, is correlated against every template rendered
/// at the component's own size. A small square blob on the baseline is a
/// decimal point. Components touching the ROI border are ignored; any other
/// unaccepted component leaves the value absent.
pub fn recognize_builtin(roi: &RasterImage, glyphs: &GlyphSet) -> OcrResult {
    recognize_with_threshold(roi, glyphs, DEFAULT_ACCEPT)
}

pub fn recognize_with_threshold(roi: &RasterImage, glyphs: &GlyphSet, accept: f64) -> OcrResult {
    let gray = roi.to_gray();
    let (w, h) = (gray.width(), gray.height());
    let px = gray.data();
    let Some((t, dark, light)) = otsu(px) else {
        return OcrResult::default();
    };
    if light - dark < MIN_CONTRAST {
        return OcrResult::default();
    }
    let ink: Vec<bool> = px.iter().map(|&v| v <= t).collect();
    let (labels, mut comps) = components(&ink, w, h);
    // anything cut by the ROI edge belongs to a neighbor (tick end, barrel
    // wall), not to this label
    comps.retain(|c| c.area >= MIN_COMPONENT_AREA && c.x0 > 0 && c.y0 > 0 && c.x1 + 1 < w && c.y1 + 1 < h);
    if comps.is_empty() {
        return OcrResult::default();
    }
    comps.sort_by_key(|c| (c.x0, c.y0));
    let comps = merge_stacked(comps);
    let line_h = comps.iter().map(Component::h).max().unwrap_or(0);
    let line_bottom = comps.iter().filter(|c| c.h() == line_h).map(|c| c.y1).max().unwrap_or(0);

    let mut text = String::new();
    let mut min_score = f64::INFINITY;
    let mut all_ok = true;
    for c in &comps {
        let (ch, score) = classify(c, &labels, px, w, line_h, line_bottom, glyphs);
        match ch {
            Some(ch) if score >= accept => {
                text.push(ch);
                min_score = min_score.min(score);
            }
            _ => {
                text.push('?');
                all_ok = false;
            }
        }
    }
    if !all_ok {
        return OcrResult {
            raw_text: text,
            value: None,
            confidence: 0.0,
            error: None,
        };
    }
    OcrResult::from_text(text, min_score)
}

fn classify(
    c: &Component,
    labels: &[u32],
    px: &[u8],
    w: u32,
    line_h: u32,
    line_bottom: u32,
    glyphs: &GlyphSet,
) -> (Option<char>, f64) {
    if line_h < MIN_GLYPH_HEIGHT {
        return (None, 0.0);
    }
    let lh = line_h as f64;
    let is_dot_shape = (c.h() as f64) <= 0.4 * lh
        && (c.w() as f64) <= 0.5 * lh
        && (c.y1 as f64) >= line_bottom as f64 - 0.2 * lh;
    if is_dot_shape {
        if !glyphs.glyphs.iter().any(|g| g.ch == '.') {
            return (None, 0.0);
        }
        let fill = c.area as f64 / (c.w() * c.h()) as f64;
        let squareness = c.w().min(c.h()) as f64 / c.w().max(c.h()) as f64;
        return (Some('.'), fill.min(squareness + 0.2).min(1.0));
    }
    if c.h() < MIN_GLYPH_HEIGHT {
        return (None, 0.0);
    }
    // ink darkness over the bbox plus a one-pixel frame; pixels of other
    // components count as background
    let (fw, fh) = (c.w() + 2, c.h() + 2);
    let mut patch = Vec::with_capacity((fw * fh) as usize);
    let height = labels.len() as u32 / w;
    for fy in 0..fh {
        for fx in 0..fw {
            let (x, y) = (c.x0 as i64 + fx as i64 - 1, c.y0 as i64 + fy as i64 - 1);
            if x < 0 || y < 0 || x >= w as i64 || y >= height as i64 {
                patch.push(0.0);
                continue;
            }
            let i = (y as u32 * w + x as u32) as usize;
            let l = labels[i];
            patch.push(if l == 0 || c.members.contains(&l) { 255.0 - px[i] as f64 } else { 0.0 });
        }
    }
    let aspect = c.w() as f64 / c.h() as f64;
    let mut best = (None, 0.0);
    let mut frame = vec![0.0; patch.len()];
    for g in glyphs.glyphs.iter().filter(|g| g.ch != '.') {
        let (_, _, gw, gh) = g.ink_box();
        let ratio = aspect / (gw as f64 / gh as f64);
        if !(1.0 / ASPECT_TOLERANCE..=ASPECT_TOLERANCE).contains(&ratio) {
            continue;
        }
        // indexed by how much narrower / shorter than the frame they are
        let templates: Vec<Vec<f64>> = (0..25u32)
            .map(|k| render_template(g, fw - k % 5, fh - k / 5))
            .collect();
        // the binarized bbox can be off by a pixel on any edge
        for l in 0..=2u32 {
            for t in 0..=2u32 {
                for r in 0..=2u32 {
                    for b in 0..=2u32 {
                        let (tw, th) = (fw - l - r, fh - t - b);
                        let tpl = &templates[((fw - tw) + 5 * (fh - th)) as usize];
                        frame.iter_mut().for_each(|v| *v = 0.0);
                        for y in 0..th {
                            let row = ((y + t) * fw + l) as usize;
                            frame[row..row + tw as usize]
                                .copy_from_slice(&tpl[(y * tw) as usize..((y + 1) * tw) as usize]);
                        }
                        let s = ncc(&patch, &frame);
                        if s > best.1 {
                            best = (Some(g.ch), s);
                        }
                    }
                }
            }
        }
    }
    best
}

/// Image format handed to an external adapter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AdapterFormat {
    #[default]
    Ppm,
    Png,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterConfig {
    /// Program and leading arguments; the image path is appended.
    pub command: Vec<String>,
    pub timeout: Duration,
    pub format: AdapterFormat,
}

impl AdapterConfig {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            timeout: Duration::from_secs(5),
            format: AdapterFormat::Ppm,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OcrError {
    #[error("could not start OCR adapter: {0}")]
    AdapterSpawnFailure(String),
    #[error("OCR adapter did not finish within {0:?}")]
    AdapterTimeout(Duration),
}

fn temp_image_path(ext: &str) -> PathBuf {
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.subsec_nanos())
        .unwrap_or(0);
    std::env::temp_dir().join(format!("scaleread-roi-{}-{}-{}.{}", std::process::id(), n, nanos, ext))
}

/// Removes the file when dropped.
struct TempFile(PathBuf);

impl Drop for TempFile {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

/// Runs the adapter on `roi`. A non-zero exit yields a result with no value
/// and the status recorded in `error`.
pub fn run_external_ocr(roi: &RasterImage, adapter: &AdapterConfig) -> Result<OcrResult, OcrError> {
    let (program, args) = adapter
        .command
        .split_first()
        .ok_or_else(|| OcrError::AdapterSpawnFailure("empty adapter command".into()))?;
    let (ext, bytes) = match adapter.format {
        AdapterFormat::Ppm => ("ppm", imgio::encode_pnm(&roi.to_rgb())),
        AdapterFormat::Png => ("png", encode_png_or_fail(roi)?),
    };
    let tmp = TempFile(temp_image_path(ext));
    std::fs::write(&tmp.0, bytes).map_err(|e| OcrError::AdapterSpawnFailure(format!("temp image: {e}")))?;

    let mut child = Command::new(program)
        .args(args)
        .arg(&tmp.0)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| OcrError::AdapterSpawnFailure(format!("{program}: {e}")))?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });

    let deadline = Instant::now() + adapter.timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(OcrError::AdapterTimeout(adapter.timeout));
            }
            Ok(None) => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(OcrError::AdapterSpawnFailure(e.to_string())),
        }
    };
    let out = reader.join().unwrap_or_default();
    let text = String::from_utf8_lossy(&out);
    let line = text.lines().next().unwrap_or("").to_string();
    if !status.success() {
        return Ok(OcrResult {
            raw_text: line,
            value: None,
            confidence: 0.0,
            error: Some(format!("adapter exited with {status}")),
        });
    }
    let value = parse_ocr_text(&line);
    Ok(OcrResult {
        confidence: if value.is_some() { 1.0 } else { 0.0 },
        raw_text: line,
        value,
        error: None,
    })
}

#[cfg(feature = "png")]
fn encode_png_or_fail(roi: &RasterImage) -> Result<Vec<u8>, OcrError> {
    imgio::encode_png(roi).map_err(|e| OcrError::AdapterSpawnFailure(format!("png encode: {e}")))
}

#[cfg(not(feature = "png"))]
fn encode_png_or_fail(_: &RasterImage) -> Result<Vec<u8>, OcrError> {
    Err(OcrError::AdapterSpawnFailure("built without png support".into()))
}

/// Renders `text` dark-on-light with `cell` pixels per font cell and a
/// margin of `margin` pixels. Used by tests and the flip check.
pub fn render_text(text: &str, cell: u32, margin: u32, ink: [u8; 3], ground: [u8; 3]) -> RasterImage {
    let tw = font::text_width_cells(text) as u32 * cell;
    let th = font::GLYPH_H as u32 * cell;
    let mut img = RasterImage::filled(tw + 2 * margin, th + 2 * margin, ground);
    for y in 0..th {
        for x in 0..tw {
            if font::text_ink(text, (x / cell) as i64, (y / cell) as i64) {
                img.put_rgb(x + margin, y + margin, ink);
            }
        }
    }
    img
}
