//! Pipeline configuration: one flat TOML table, unknown keys rejected.

use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::calib::CalibOptions;
use crate::contour::{Bounds, ColorRange};
use crate::digits::{AdapterConfig, AdapterFormat, RoiProportions};
use crate::gauge::IndicatorKind;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OcrEngine {
    #[default]
    Builtin,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum IndicatorChoice {
    #[default]
    Plunger,
    Meniscus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Longest image edge after the initial resize.
    pub resize_target: u32,
    /// Growth of the heuristic ROI box, as a fraction of its size.
    pub roi_dilation: f64,

    pub marker_hsv_lo: [u8; 3],
    pub marker_hsv_hi: [u8; 3],
    pub marker_hue_wraps: bool,
    pub indicator_hsv_lo: [u8; 3],
    pub indicator_hsv_hi: [u8; 3],
    pub indicator_hue_wraps: bool,

    /// Minimum bbox width/height for a tick contour (strict).
    pub aspect_threshold: f64,
    /// Relative length drop that starts a new marker group.
    pub group_jump: f64,
    /// Padding around the tick bbox when cropping to the scale.
    pub pad_fraction: f64,
    /// Extra width kept beside the ticks for labels, in major-tick lengths.
    pub label_margin: f64,
    pub roi_width_factor: f64,
    pub roi_height_factor: f64,

    pub ocr_engine: OcrEngine,
    pub template_accept: f64,
    pub ocr_command: Vec<String>,
    pub ocr_timeout_ms: u64,
    pub ocr_format: AdapterFormat,

    pub slope_decimals: u32,
    /// Relative slope tolerance for consensus; 0 requires exact equality.
    pub slope_rel_tol: f64,
    /// Value grain for snapping; inferred from the labels when absent.
    pub grain: Option<f64>,

    pub indicator: IndicatorChoice,
    pub plunger_offset: f64,
    pub indicator_area_min: f64,
    pub indicator_area_max: f64,
    pub indicator_perimeter_min: f64,
    pub indicator_perimeter_max: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            resize_target: 1000,
            roi_dilation: 0.2,
            marker_hsv_lo: [100, 120, 60],
            marker_hsv_hi: [135, 255, 255],
            marker_hue_wraps: false,
            indicator_hsv_lo: [0, 0, 0],
            indicator_hsv_hi: [179, 255, 90],
            indicator_hue_wraps: false,
            aspect_threshold: 2.5,
            group_jump: 0.15,
            pad_fraction: 0.1,
            label_margin: 1.6,
            roi_width_factor: 1.5,
            roi_height_factor: 0.6,
            ocr_engine: OcrEngine::Builtin,
            template_accept: 0.8,
            ocr_command: Vec::new(),
            ocr_timeout_ms: 5000,
            ocr_format: AdapterFormat::Ppm,
            slope_decimals: 4,
            slope_rel_tol: 0.03,
            grain: None,
            indicator: IndicatorChoice::Plunger,
            plunger_offset: IndicatorKind::DEFAULT_PLUNGER_OFFSET,
            indicator_area_min: 93.0,
            indicator_area_max: 100_000.0,
            indicator_perimeter_min: 0.0,
            indicator_perimeter_max: f64::INFINITY,
        }
    }
}

fn check(ok: bool, key: &'static str, reason: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key,
            reason: reason.to_string(),
        })
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `key=value` overrides, where `value` is a TOML literal or a
    /// bare string. Unknown keys are rejected.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut table: toml::Table =
            toml::from_str(&self.to_toml_string()).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse(format!("override `{o}` is not key=value")))?;
            let (k, v) = (k.trim(), v.trim());
            let value = toml::from_str::<toml::Table>(&format!("v = {v}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(v.to_string()));
            table.insert(k.to_string(), value);
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.resize_target >= 16, "resize_target", "must be at least 16")?;
        check((0.0..=2.0).contains(&self.roi_dilation), "roi_dilation", "must lie in [0, 2]")?;
        check(self.marker_range().is_valid(), "marker_hsv_lo", "range bounds out of order or hue > 179")?;
        check(
            self.indicator_range().is_valid(),
            "indicator_hsv_lo",
            "range bounds out of order or hue > 179",
        )?;
        check(self.aspect_threshold > 0.0, "aspect_threshold", "must be positive")?;
        check(self.group_jump > 0.0 && self.group_jump < 1.0, "group_jump", "must lie in (0, 1)")?;
        check((0.0..=1.0).contains(&self.pad_fraction), "pad_fraction", "must lie in [0, 1]")?;
        check((0.0..=10.0).contains(&self.label_margin), "label_margin", "must lie in [0, 10]")?;
        check(self.roi_width_factor > 0.0, "roi_width_factor", "must be positive")?;
        check(self.roi_height_factor > 0.0, "roi_height_factor", "must be positive")?;
        check((0.0..=1.0).contains(&self.template_accept), "template_accept", "must lie in [0, 1]")?;
        check(
            self.ocr_engine == OcrEngine::Builtin || !self.ocr_command.is_empty(),
            "ocr_command",
            "required when ocr_engine = \"external\"",
        )?;
        check(self.ocr_timeout_ms > 0, "ocr_timeout_ms", "must be positive")?;
        check(self.slope_decimals <= 12, "slope_decimals", "must be at most 12")?;
        check((0.0..0.5).contains(&self.slope_rel_tol), "slope_rel_tol", "must lie in [0, 0.5)")?;
        check(
            self.grain.is_none_or(|g| g > 0.0 && g.is_finite()),
            "grain",
            "must be positive",
        )?;
        check((0.0..=0.5).contains(&self.plunger_offset), "plunger_offset", "must lie in [0, 0.5]")?;
        check(
            self.indicator_area_min >= 0.0 && self.indicator_area_min <= self.indicator_area_max,
            "indicator_area_min",
            "must be non-negative and not above indicator_area_max",
        )?;
        check(
            self.indicator_perimeter_min >= 0.0 && self.indicator_perimeter_min <= self.indicator_perimeter_max,
            "indicator_perimeter_min",
            "must be non-negative and not above indicator_perimeter_max",
        )?;
        Ok(())
    }

    pub fn marker_range(&self) -> ColorRange {
        ColorRange {
            lo: self.marker_hsv_lo,
            hi: self.marker_hsv_hi,
            hue_wraps: self.marker_hue_wraps,
        }
    }

    pub fn indicator_range(&self) -> ColorRange {
        ColorRange {
            lo: self.indicator_hsv_lo,
            hi: self.indicator_hsv_hi,
            hue_wraps: self.indicator_hue_wraps,
        }
    }

    pub fn indicator_kind(&self) -> IndicatorKind {
        match self.indicator {
            IndicatorChoice::Meniscus => IndicatorKind::Meniscus,
            IndicatorChoice::Plunger => IndicatorKind::Plunger {
                offset_frac: self.plunger_offset,
            },
        }
    }

    pub fn area_bounds(&self) -> Bounds {
        Bounds::new(self.indicator_area_min, self.indicator_area_max)
    }

    pub fn perimeter_bounds(&self) -> Bounds {
        Bounds::new(self.indicator_perimeter_min, self.indicator_perimeter_max)
    }

    pub fn roi_proportions(&self) -> RoiProportions {
        RoiProportions {
            width_factor: self.roi_width_factor,
            height_factor: self.roi_height_factor,
        }
    }

    pub fn calib_options(&self) -> CalibOptions {
        CalibOptions {
            slope_decimals: self.slope_decimals as i32,
            slope_rel_tol: self.slope_rel_tol,
            grain: self.grain,
        }
    }

    pub fn adapter(&self) -> AdapterConfig {
        AdapterConfig {
            command: self.ocr_command.clone(),
            timeout: Duration::from_millis(self.ocr_timeout_ms),
            format: self.ocr_format,
        }
    }

    /// Config matching a synthetic preset's indicator.
    pub fn for_indicator(kind: IndicatorKind) -> Self {
        let mut c = Config::default();
        match kind {
            IndicatorKind::Meniscus => c.indicator = IndicatorChoice::Meniscus,
            IndicatorKind::Plunger { offset_frac } => {
                c.indicator = IndicatorChoice::Plunger;
                c.plunger_offset = offset_frac;
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = Config::default();
        c.validate().unwrap();
        let back = Config::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = Config::from_toml_str("aspect_treshold = 3.0").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
        assert!(Config::default().with_overrides(&["nope=1"]).is_err());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml_str("indicator = \"meniscus\"\ngroup_jump = 0.2\n").unwrap();
        assert_eq!(c.indicator_kind(), IndicatorKind::Meniscus);
        assert_eq!(c.group_jump, 0.2);
        assert_eq!(c.aspect_threshold, 2.5);
    }

    #[test]
    fn overrides_parse_literals_and_bare_strings() {
        let c = Config::default()
            .with_overrides(&["aspect_threshold=3", "indicator=meniscus", "marker_hsv_lo=[90,100,50]"])
            .unwrap();
        assert_eq!(c.aspect_threshold, 3.0);
        assert_eq!(c.indicator, IndicatorChoice::Meniscus);
        assert_eq!(c.marker_hsv_lo, [90, 100, 50]);
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in [
            "group_jump = 1.5",
            "plunger_offset = 0.7",
            "marker_hsv_lo = [140, 0, 0]",
            "ocr_engine = \"external\"",
            "indicator_area_min = 10\nindicator_area_max = 5",
        ] {
            assert!(
                matches!(Config::from_toml_str(bad), Err(ConfigError::Invalid { .. })),
                "{bad}"
            );
        }
    }
}
