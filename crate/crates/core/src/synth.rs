//! Synthetic syringe and cylinder scales with exact ground truth.
//!
//! Scenes are described in an upright "scene frame" (units are pixels at
//! scale factor 1, origin at the middle of the scale, y down) and rendered
//! by inverse-mapping every sub-sample through the rotation, so ground-truth
//! coordinates are exact rather than resampled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contour::BinaryMask;
use crate::digits::Side;
use crate::font;
use crate::gauge::IndicatorKind;
use crate::raster::{hsv_to_rgb, rgb_to_hsv, Angle, RasterImage};

pub const MAJOR_LEN: f64 = 40.0;
pub const MINOR_LEN: f64 = 16.0;
pub const TICK_THICKNESS: f64 = 3.0;
const LABEL_GAP: f64 = 8.0;
/// Distance from the scale axis to the fixed end of every tick.
const TICK_ANCHOR: f64 = 60.0;
const BARREL_HALF_WIDTH: f64 = 80.0;
const BARREL_END_PAD: f64 = 50.0;
const PLUNGER_HEIGHT: f64 = 14.0;
const MENISCUS_THICKNESS: f64 = 4.0;
/// Rise of the meniscus at the barrel walls.
const MENISCUS_RISE: f64 = 10.0;
const SUPERSAMPLE: u32 = 3;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scale spec: {0}")]
    SpecInvalid(String),
}

/// Scene colors, each as 8-bit HSV (hue in half-degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleColors {
    pub tick: [u8; 3],
    pub label: [u8; 3],
    pub indicator: [u8; 3],
    pub background: [u8; 3],
    pub barrel: [u8; 3],
    pub liquid: [u8; 3],
    pub plunger_rod: [u8; 3],
}

impl Default for ScaleColors {
    fn default() -> Self {
        let blue = rgb_to_hsv([20, 40, 160]);
        Self {
            tick: blue,
            label: blue,
            indicator: rgb_to_hsv([25, 25, 28]),
            background: rgb_to_hsv([120, 135, 115]),
            barrel: rgb_to_hsv([235, 235, 235]),
            liquid: rgb_to_hsv([205, 225, 240]),
            plunger_rod: rgb_to_hsv([175, 175, 180]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub canvas: (u32, u32),
    /// Distance from first to last major tick at scale factor 1.
    pub scale_length: f64,
    pub n_major: usize,
    /// Minor ticks between consecutive majors.
    pub minors_per_major: usize,
    pub major_value_step: f64,
    /// Syringes count down the barrel, cylinders count up.
    pub values_increase_downward: bool,
    pub label_side: Side,
    /// Label glyph height at scale factor 1.
    pub glyph_height: f64,
    pub colors: ScaleColors,
    pub indicator: IndicatorKind,
    pub level: f64,
    pub rotation: Angle,
    pub scale_factor: f64,
    pub noise_sigma: f64,
    pub clutter: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    Syringe,
    Cylinder,
}

impl std::str::FromStr for PresetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "syringe" => Ok(Self::Syringe),
            "cylinder" => Ok(Self::Cylinder),
            other => Err(format!("unknown preset `{other}` (expected syringe or cylinder)")),
        }
    }
}

pub fn preset(kind: PresetKind) -> ScaleSpec {
    match kind {
        PresetKind::Syringe => ScaleSpec {
            canvas: (640, 640),
            scale_length: 300.0,
            n_major: 5,
            minors_per_major: 4,
            major_value_step: 1.0,
            values_increase_downward: true,
            label_side: Side::Right,
            glyph_height: 21.0,
            colors: ScaleColors::default(),
            indicator: IndicatorKind::plunger(),
            level: 2.2,
            rotation: Angle::degrees(0.0),
            scale_factor: 1.0,
            noise_sigma: 4.0,
            clutter: false,
        },
        PresetKind::Cylinder => ScaleSpec {
            canvas: (800, 800),
            scale_length: 400.0,
            n_major: 6,
            minors_per_major: 9,
            major_value_step: 10.0,
            values_increase_downward: false,
            label_side: Side::Right,
            glyph_height: 21.0,
            colors: ScaleColors::default(),
            indicator: IndicatorKind::Meniscus,
            level: 37.0,
            rotation: Angle::degrees(0.0),
            scale_factor: 1.0,
            noise_sigma: 4.0,
            clutter: false,
        },
    }
}

impl ScaleSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::SpecInvalid(m.to_string()));
        if self.n_major < 2 {
            return bad("n_major must be at least 2");
        }
        if !(self.major_value_step > 0.0 && self.major_value_step.is_finite()) {
            return bad("major_value_step must be positive");
        }
        if !(self.scale_length > 0.0 && self.scale_length.is_finite()) {
            return bad("scale_length must be positive");
        }
        if !(0.0..=self.max_value() + 1e-9).contains(&self.level) {
            return bad("level outside the printed range");
        }
        if !(0.3..=3.0).contains(&self.scale_factor) {
            return bad("scale_factor must lie in [0.3, 3]");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be non-negative");
        }
        if self.canvas.0 < 16 || self.canvas.1 < 16 {
            return bad("canvas too small");
        }
        if !(self.glyph_height > 0.0) {
            return bad("glyph_height must be positive");
        }
        if !self.indicator.is_valid() {
            return bad("plunger offset must lie in [0, 0.5]");
        }
        Ok(())
    }

    pub fn max_value(&self) -> f64 {
        (self.n_major - 1) as f64 * self.major_value_step
    }

    pub fn minor_step(&self) -> f64 {
        self.major_value_step / (self.minors_per_major + 1) as f64
    }

    fn major_gap(&self) -> f64 {
        self.scale_length / (self.n_major - 1) as f64
    }

    /// Scene y of the major tick `k` (0 = top).
    pub fn major_scene_y(&self, k: usize) -> f64 {
        -self.scale_length / 2.0 + k as f64 * self.major_gap()
    }

    pub fn major_value(&self, k: usize) -> f64 {
        let i = if self.values_increase_downward { k } else { self.n_major - 1 - k };
        i as f64 * self.major_value_step
    }

    /// Scene y at which `value` is printed.
    pub fn value_scene_y(&self, value: f64) -> f64 {
        let t = value / self.major_value_step * self.major_gap();
        if self.values_increase_downward {
            -self.scale_length / 2.0 + t
        } else {
            self.scale_length / 2.0 - t
        }
    }

    fn label_text(&self, k: usize) -> String {
        format_label(self.major_value(k), self.major_value_step)
    }
}

/// Shortest decimal text that reproduces `v` on the grid of `step`.
pub fn format_label(v: f64, step: f64) -> String {
    for decimals in 0..6 {
        let s = format!("{v:.decimals$}");
        let back: f64 = s.parse().unwrap_or(f64::NAN);
        if (back - v).abs() < 1e-9 * step.max(1.0) {
            return s;
        }
    }
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub level: f64,
    pub rotation: Angle,
    /// Centers of the major ticks, top to bottom in the scene frame, in
    /// pixel-index coordinates of the rendered image.
    pub major_positions: Vec<(f64, f64)>,
    pub label_values: Vec<f64>,
    pub indicator_point: (f64, f64),
    /// Barrel outline corners in the rendered image.
    pub barrel_corners: [(f64, f64); 4],
    pub minor_step: f64,
}

/// Record written beside each rendered image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    /// Image file name, relative to the manifest.
    pub image: String,
    pub seed: u64,
    pub scene: ScaleSpec,
    pub ground_truth: GroundTruth,
}

/// Scene-to-image mapping for one scene description.
#[derive(Debug, Clone, Copy)]
pub struct SceneTransform {
    cx: f64,
    cy: f64,
    f: f64,
    cos: f64,
    sin: f64,
}

impl SceneTransform {
    pub fn new(spec: &ScaleSpec) -> Self {
        let r = spec.rotation.radians();
        Self {
            cx: spec.canvas.0 as f64 / 2.0,
            cy: spec.canvas.1 as f64 / 2.0,
            f: spec.scale_factor,
            cos: r.cos(),
            sin: r.sin(),
        }
    }

    /// Scene point to continuous image coordinates (pixel `i` spans [i, i+1)).
    pub fn to_image(&self, sx: f64, sy: f64) -> (f64, f64) {
        let (dx, dy) = (sx * self.f, sy * self.f);
        (
            self.cx + dx * self.cos + dy * self.sin,
            self.cy - dx * self.sin + dy * self.cos,
        )
    }

    /// Scene point to pixel-index coordinates (pixel centers are integers).
    pub fn to_pixel(&self, sx: f64, sy: f64) -> (f64, f64) {
        let (x, y) = self.to_image(sx, sy);
        (x - 0.5, y - 0.5)
    }

    pub fn to_scene(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        (
            (dx * self.cos - dy * self.sin) / self.f,
            (dx * self.sin + dy * self.cos) / self.f,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layer {
    Background,
    Barrel,
    Liquid,
    Rod,
    Indicator,
    Tick,
    Label,
}

struct Scene<'a> {
    spec: &'a ScaleSpec,
    labels: Vec<String>,
    /// Ticks are counted from the top one, majors every `period`.
    tick_gap: f64,
    period: usize,
    n_ticks: usize,
    level_y: f64,
    barrel_top: f64,
    barrel_bottom: f64,
    cell: f64,
}

impl<'a> Scene<'a> {
    fn new(spec: &'a ScaleSpec) -> Self {
        let period = spec.minors_per_major + 1;
        let n_ticks = (spec.n_major - 1) * period + 1;
        Self {
            spec,
            labels: (0..spec.n_major).map(|k| spec.label_text(k)).collect(),
            tick_gap: spec.scale_length / (n_ticks - 1) as f64,
            period,
            n_ticks,
            level_y: spec.value_scene_y(spec.level),
            barrel_top: -spec.scale_length / 2.0 - BARREL_END_PAD,
            barrel_bottom: spec.scale_length / 2.0 + BARREL_END_PAD,
            cell: spec.glyph_height / font::GLYPH_H as f64,
        }
    }

    fn right(&self) -> bool {
        self.spec.label_side == Side::Right
    }

    fn in_barrel(&self, sx: f64, sy: f64) -> bool {
        sx.abs() < BARREL_HALF_WIDTH && sy >= self.barrel_top && sy < self.barrel_bottom
    }

    /// Scene x-span [x0, x1) of a tick of `len`.
    fn tick_span(&self, len: f64) -> (f64, f64) {
        if self.right() {
            (-TICK_ANCHOR, -TICK_ANCHOR + len)
        } else {
            (TICK_ANCHOR - len, TICK_ANCHOR)
        }
    }

    fn is_tick(&self, sx: f64, sy: f64) -> bool {
        let i = ((sy + self.spec.scale_length / 2.0) / self.tick_gap).round();
        if i < 0.0 || i >= self.n_ticks as f64 {
            return false;
        }
        let yc = -self.spec.scale_length / 2.0 + i * self.tick_gap;
        if !(sy >= yc - TICK_THICKNESS / 2.0 && sy < yc + TICK_THICKNESS / 2.0) {
            return false;
        }
        let len = if (i as usize).is_multiple_of(self.period) { MAJOR_LEN } else { MINOR_LEN };
        let (x0, x1) = self.tick_span(len);
        sx >= x0 && sx < x1
    }

    fn is_label(&self, sx: f64, sy: f64) -> bool {
        let gap = self.spec.major_gap();
        let k = ((sy + self.spec.scale_length / 2.0) / gap).round();
        if k < 0.0 || k >= self.spec.n_major as f64 {
            return false;
        }
        let k = k as usize;
        let text = &self.labels[k];
        let width = font::text_width_cells(text) as f64 * self.cell;
        let x0 = if self.right() {
            -TICK_ANCHOR + MAJOR_LEN + LABEL_GAP
        } else {
            TICK_ANCHOR - MAJOR_LEN - LABEL_GAP - width
        };
        let y0 = self.spec.major_scene_y(k) - self.spec.glyph_height / 2.0;
        let col = ((sx - x0) / self.cell).floor();
        let row = ((sy - y0) / self.cell).floor();
        font::text_ink(text, col as i64, row as i64)
    }

    fn interior(&self, sx: f64, sy: f64) -> Layer {
        match self.spec.indicator {
            IndicatorKind::Plunger { offset_frac } => {
                let top = self.level_y - offset_frac * PLUNGER_HEIGHT;
                if sy < top {
                    Layer::Liquid
                } else if sy < top + PLUNGER_HEIGHT && sx.abs() < BARREL_HALF_WIDTH - 2.0 {
                    Layer::Indicator
                } else if sy >= top + PLUNGER_HEIGHT && sx.abs() < BARREL_HALF_WIDTH * 0.5 {
                    Layer::Rod
                } else {
                    Layer::Barrel
                }
            }
            IndicatorKind::Meniscus => {
                let half = BARREL_HALF_WIDTH - 2.0;
                if sx.abs() >= half {
                    return Layer::Barrel;
                }
                let bottom = self.level_y - MENISCUS_RISE * (sx / half).powi(2);
                if sy >= bottom - MENISCUS_THICKNESS && sy < bottom {
                    Layer::Indicator
                } else if sy >= bottom {
                    Layer::Liquid
                } else {
                    Layer::Barrel
                }
            }
        }
    }

    fn layer(&self, sx: f64, sy: f64) -> Layer {
        if !self.in_barrel(sx, sy) {
            return Layer::Background;
        }
        if self.is_tick(sx, sy) {
            return Layer::Tick;
        }
        if self.is_label(sx, sy) {
            return Layer::Label;
        }
        self.interior(sx, sy)
    }

    fn color(&self, layer: Layer) -> [u8; 3] {
        let c = &self.spec.colors;
        hsv_to_rgb(match layer {
            Layer::Background => c.background,
            Layer::Barrel => c.barrel,
            Layer::Liquid => c.liquid,
            Layer::Rod => c.plunger_rod,
            Layer::Indicator => c.indicator,
            Layer::Tick => c.tick,
            Layer::Label => c.label,
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Disc { x: f64, y: f64, r: f64 },
    Box { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Disc { x: cx, y: cy, r } => (x - cx).powi(2) + (y - cy).powi(2) < r * r,
            Shape::Box { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
        }
    }
}

/// Colors that are neither marker blue nor indicator dark.
const CLUTTER_PALETTE: [[u8; 3]; 5] = [[200, 40, 40], [40, 160, 60], [220, 200, 40], [230, 120, 30], [150, 60, 170]];

fn clutter_shapes(spec: &ScaleSpec, scene: &Scene, tf: &SceneTransform, seed: u64) -> Vec<(Shape, [u8; 3])> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let (w, h) = (spec.canvas.0 as f64, spec.canvas.1 as f64);
    let n = rng.random_range(6..=10);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < n && attempts < 200 {
        attempts += 1;
        let x = rng.random_range(0.0..w);
        let y = rng.random_range(0.0..h);
        let r = rng.random_range(0.03..0.08) * w.min(h);
        // keep a margin of one radius (in scene units) plus slack around the barrel
        let (sx, sy) = tf.to_scene(x, y);
        let m = r / spec.scale_factor * std::f64::consts::SQRT_2 + 10.0;
        let near = sx.abs() < BARREL_HALF_WIDTH + m && sy > scene.barrel_top - m && sy < scene.barrel_bottom + m;
        if near {
            continue;
        }
        let color = CLUTTER_PALETTE[rng.random_range(0..CLUTTER_PALETTE.len())];
        let shape = if rng.random_bool(0.5) {
            Shape::Disc { x, y, r }
        } else {
            let a = rng.random_range(0.5..1.0);
            Shape::Box {
                x0: x - r,
                y0: y - r * a,
                x1: x + r,
                y1: y + r * a,
            }
        };
        out.push((shape, color));
    }
    out
}

pub fn render_scale(spec: &ScaleSpec, seed: u64) -> Result<(RasterImage, GroundTruth), SynthError> {
    spec.validate()?;
    let scene = Scene::new(spec);
    let tf = SceneTransform::new(spec);
    let clutter = if spec.clutter { clutter_shapes(spec, &scene, &tf, seed) } else { Vec::new() };
    let background = scene.color(Layer::Background);

    let (w, h) = spec.canvas;
    let mut img = RasterImage::filled(w, h, background);
    let n = SUPERSAMPLE;
    let offs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    for py in 0..h {
        for px in 0..w {
            let mut acc = [0u32; 3];
            for oy in &offs {
                for ox in &offs {
                    let (x, y) = (px as f64 + ox, py as f64 + oy);
                    let (sx, sy) = tf.to_scene(x, y);
                    let layer = scene.layer(sx, sy);
                    let c = if layer == Layer::Background {
                        clutter
                            .iter()
                            .rev()
                            .find(|(s, _)| s.contains(x, y))
                            .map_or(background, |(_, c)| *c)
                    } else {
                        scene.color(layer)
                    };
                    for ch in 0..3 {
                        acc[ch] += c[ch] as u32;
                    }
                }
            }
            let k = n * n;
            img.put_rgb(px, py, acc.map(|a| ((a + k / 2) / k) as u8));
        }
    }
    if spec.noise_sigma > 0.0 {
        add_noise(&mut img, spec.noise_sigma, seed);
    }
    Ok((img, ground_truth(spec, &scene, &tf)))
}

fn add_noise(img: &mut RasterImage, sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let (w, h) = (img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            for v in img.pixel_mut(x, y) {
                let n: f64 = normal.sample(&mut rng);
                *v = (*v as f64 + n).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
}

fn ground_truth(spec: &ScaleSpec, scene: &Scene, tf: &SceneTransform) -> GroundTruth {
    let (x0, x1) = scene.tick_span(MAJOR_LEN);
    let tick_cx = (x0 + x1) / 2.0;
    let major_positions = (0..spec.n_major)
        .map(|k| tf.to_pixel(tick_cx, spec.major_scene_y(k)))
        .collect();
    let bw = BARREL_HALF_WIDTH;
    let barrel_corners = [
        tf.to_pixel(-bw, scene.barrel_top),
        tf.to_pixel(bw, scene.barrel_top),
        tf.to_pixel(bw, scene.barrel_bottom),
        tf.to_pixel(-bw, scene.barrel_bottom),
    ];
    GroundTruth {
        level: spec.level,
        rotation: spec.rotation,
        major_positions,
        label_values: (0..spec.n_major).map(|k| spec.major_value(k)).collect(),
        indicator_point: tf.to_pixel(0.0, scene.level_y),
        barrel_corners,
        minor_step: spec.minor_step(),
    }
}

/// Renders a lone label the way scenes draw them: supersampled glyph cells
/// of fractional size, shifted by a sub-pixel `offset`, label ink on barrel
/// ground, then Gaussian noise. The margin around the text is 0.4 glyph
/// heights so the text never touches the border.
pub fn render_label(text: &str, glyph_height: f64, offset: (f64, f64), noise_sigma: f64, seed: u64) -> RasterImage {
    let colors = ScaleColors::default();
    let (ink, ground) = (hsv_to_rgb(colors.label), hsv_to_rgb(colors.barrel));
    let cell = glyph_height / font::GLYPH_H as f64;
    let margin = (0.4 * glyph_height).ceil() + 1.0;
    let tw = font::text_width_cells(text) as f64 * cell;
    let w = (tw + 2.0 * margin).ceil() as u32;
    let h = (glyph_height + 2.0 * margin).ceil() as u32;
    let mut img = RasterImage::filled(w, h, ground);
    let n = SUPERSAMPLE;
    let k = n * n;
    for py in 0..h {
        for px in 0..w {
            let mut hits = 0u32;
            for i in 0..k {
                let x = px as f64 + ((i % n) as f64 + 0.5) / n as f64 - margin - offset.0;
                let y = py as f64 + ((i / n) as f64 + 0.5) / n as f64 - margin - offset.1;
                if font::text_ink(text, (x / cell).floor() as i64, (y / cell).floor() as i64) {
                    hits += 1;
                }
            }
            let mix = |c: usize| ((ink[c] as u32 * hits + ground[c] as u32 * (k - hits) + k / 2) / k) as u8;
            img.put_rgb(px, py, [mix(0), mix(1), mix(2)]);
        }
    }
    if noise_sigma > 0.0 {
        add_noise(&mut img, noise_sigma, seed);
    }
    img
}

/// Pixels whose center falls on a tick, for checking ROI coverage.
pub fn tick_mask(spec: &ScaleSpec) -> BinaryMask {
    let scene = Scene::new(spec);
    let tf = SceneTransform::new(spec);
    BinaryMask::from_fn(spec.canvas.0, spec.canvas.1, |x, y| {
        let (sx, sy) = tf.to_scene(x as f64 + 0.5, y as f64 + 0.5);
        scene.in_barrel(sx, sy) && scene.is_tick(sx, sy)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Rotation,
    ScaleFactor,
    Level,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rotation" => Ok(Self::Rotation),
            "scale_factor" | "scale" => Ok(Self::ScaleFactor),
            "level" => Ok(Self::Level),
            other => Err(format!("unknown sweep axis `{other}`")),
        }
    }
}

/// A copy of the scene description with one axis set to `value`.
pub fn with_axis(spec: &ScaleSpec, axis: SweepAxis, value: f64) -> ScaleSpec {
    let mut s = spec.clone();
    match axis {
        SweepAxis::Rotation => s.rotation = Angle::degrees(value),
        SweepAxis::ScaleFactor => s.scale_factor = value,
        SweepAxis::Level => s.level = value,
    }
    s
}

pub fn sweep(
    spec: &ScaleSpec,
    axis: SweepAxis,
    values: &[f64],
    seed: u64,
) -> Result<Vec<(RasterImage, GroundTruth)>, SynthError> {
    let specs: Vec<ScaleSpec> = values.iter().map(|&v| with_axis(spec, axis, v)).collect();
    for s in &specs {
        s.validate()?;
    }
    specs.iter().map(|s| render_scale(s, seed)).collect()
}
