//! Browser bindings for the demo page. The plain functions carry the logic
//! and are tested natively; the exported wrappers only convert errors for
//! JavaScript.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use scaleread::config::Config;
use scaleread::evalkit::{benchmark, Evaluation, Plot};
use scaleread::gauge::{read_scale_traced, Confidence, IndicatorKind, Trace};
use scaleread::raster::{Angle, RasterImage};
use scaleread::synth::{preset, render_scale, GroundTruth, PresetKind};

/// A rendered scene as canvas-ready RGBA plus its ground truth.
#[wasm_bindgen]
pub struct Scene {
    width: u32,
    height: u32,
    rgba: Vec<u8>,
    truth: GroundTruth,
    indicator: IndicatorKind,
}

#[wasm_bindgen]
impl Scene {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    /// Level the scene was rendered at.
    #[wasm_bindgen(getter)]
    pub fn level(&self) -> f64 {
        self.truth.level
    }

    #[wasm_bindgen(getter, js_name = minorStep)]
    pub fn minor_step(&self) -> f64 {
        self.truth.minor_step
    }

    /// `"plunger"` or `"meniscus"`.
    #[wasm_bindgen(getter)]
    pub fn indicator(&self) -> String {
        indicator_name(self.indicator).to_string()
    }
}

fn indicator_name(k: IndicatorKind) -> &'static str {
    match k {
        IndicatorKind::Meniscus => "meniscus",
        IndicatorKind::Plunger { .. } => "plunger",
    }
}

pub fn render(kind: &str, level: f64, rotation_deg: f64, scale_factor: f64, noise: f64, seed: u64) -> Result<Scene, String> {
    let kind: PresetKind = kind.parse()?;
    let mut spec = preset(kind);
    spec.level = level;
    spec.rotation = Angle::degrees(rotation_deg);
    spec.scale_factor = scale_factor;
    spec.noise_sigma = noise;
    let (img, truth) = render_scale(&spec, seed).map_err(|e| e.to_string())?;
    Ok(Scene {
        width: img.width(),
        height: img.height(),
        rgba: to_rgba(&img),
        truth,
        indicator: spec.indicator,
    })
}

fn to_rgba(img: &RasterImage) -> Vec<u8> {
    let rgb = img.to_rgb();
    rgb.data().chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReadSummary {
    pub ok: bool,
    pub value: Option<f64>,
    pub confidence: Option<&'static str>,
    pub slope: Option<f64>,
    pub offset: Option<f64>,
    /// Correction applied to the frame, degrees counter-clockwise.
    pub rotation: Option<f64>,
    pub labels: Vec<Label>,
    pub rejected: Vec<usize>,
    pub stage: Option<&'static str>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Label {
    pub position: f64,
    pub text: String,
    pub read: Option<f64>,
    pub corrected: Option<f64>,
}

/// Reads an RGBA frame (alpha ignored). Pipeline failures come back as a
/// summary with `ok == false` and the failing stage.
pub fn read_frame(rgba: &[u8], width: u32, height: u32, indicator: &str) -> Result<ReadSummary, String> {
    if rgba.len() != width as usize * height as usize * 4 {
        return Err(format!("expected {} RGBA bytes, got {}", width * height * 4, rgba.len()));
    }
    let rgb: Vec<u8> = rgba.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).collect();
    let img = RasterImage::from_raw(width, height, 3, rgb).map_err(|e| e.to_string())?;
    let cfg = Config::default()
        .with_overrides(&[format!("indicator = \"{indicator}\"")])
        .map_err(|e| e.to_string())?;
    let mut trace = Trace::default();
    let result = read_scale_traced(&img, &cfg, None, &mut trace);
    let d = &trace.diagnostics;
    let mut summary = ReadSummary {
        ok: false,
        value: None,
        confidence: None,
        slope: None,
        offset: None,
        rotation: d.rotation.map(Angle::value),
        labels: Vec::new(),
        rejected: d.rejected.clone(),
        stage: None,
        error: None,
    };
    match result {
        Ok(r) => {
            summary.ok = true;
            summary.value = Some(r.value);
            summary.confidence = Some(match r.confidence {
                Confidence::Low => "low",
                Confidence::Normal => "normal",
            });
            summary.slope = Some(r.relation.slope);
            summary.offset = Some(r.relation.offset);
            summary.labels = d
                .ocr
                .iter()
                .zip(&r.markers)
                .map(|(o, m)| Label {
                    position: o.position,
                    text: o.raw_text.clone(),
                    read: o.value,
                    corrected: m.value,
                })
                .collect();
        }
        Err(e) => {
            summary.stage = Some(e.stage().name());
            summary.error = Some(e.to_string());
            summary.labels = d
                .ocr
                .iter()
                .map(|o| Label {
                    position: o.position,
                    text: o.raw_text.clone(),
                    read: o.value,
                    corrected: None,
                })
                .collect();
        }
    }
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub table: String,
    /// `(file name, SVG)` for each panel.
    pub plots: Vec<(String, String)>,
}

pub fn benchmark_report() -> Result<Report, String> {
    let (asp, disp) = benchmark();
    let eval = Evaluation::new(asp, disp).map_err(|e| e.to_string())?;
    Ok(Report {
        table: eval.summary_table(),
        plots: Plot::ALL
            .iter()
            .map(|&p| (p.file_name().to_string(), eval.svg(p)))
            .collect(),
    })
}

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen(js_name = renderScene)]
pub fn render_scene_js(
    kind: &str,
    level: f64,
    rotation_deg: f64,
    scale_factor: f64,
    noise: f64,
    seed: u32,
) -> Result<Scene, JsError> {
    render(kind, level, rotation_deg, scale_factor, noise, seed as u64).map_err(js_err)
}

/// JSON-encoded [`ReadSummary`].
#[wasm_bindgen(js_name = readFrame)]
pub fn read_frame_js(rgba: &[u8], width: u32, height: u32, indicator: &str) -> Result<String, JsError> {
    let s = read_frame(rgba, width, height, indicator).map_err(js_err)?;
    serde_json::to_string(&s).map_err(|e| js_err(e.to_string()))
}

/// JSON-encoded [`Report`].
#[wasm_bindgen(js_name = benchmarkReport)]
pub fn benchmark_report_js() -> Result<String, JsError> {
    let r = benchmark_report().map_err(js_err)?;
    serde_json::to_string(&r).map_err(|e| js_err(e.to_string()))
}
