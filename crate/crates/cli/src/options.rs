use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use scaleread::config::Config;
use scaleread::gauge::Sidecar;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum IndicatorArg {
    Plunger,
    Meniscus,
}

/// Options that resolve to a pipeline configuration. Each flag is a
/// shorthand for a config key and wins over the file.
#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// TOML config file; unknown keys are rejected.
    #[arg(long, env = "SCALEREAD_CONFIG", value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Indicator kind (config key `indicator`).
    #[arg(long, value_enum)]
    pub indicator: Option<IndicatorArg>,
    /// External OCR command, whitespace separated (config keys
    /// `ocr_command`, `ocr_engine = "external"`).
    #[arg(long, value_name = "CMD")]
    pub ocr_command: Option<String>,
    /// Override any config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<Config> {
        let base = match &self.config {
            Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display()))?,
            None => Config::default(),
        };
        let mut overrides = Vec::new();
        if let Some(k) = self.indicator {
            let name = match k {
                IndicatorArg::Plunger => "plunger",
                IndicatorArg::Meniscus => "meniscus",
            };
            overrides.push(format!("indicator = \"{name}\""));
        }
        if let Some(cmd) = &self.ocr_command {
            let parts: Vec<String> = cmd.split_whitespace().map(|s| format!("{s:?}")).collect();
            overrides.push(format!("ocr_command = [{}]", parts.join(", ")));
            overrides.push("ocr_engine = \"external\"".into());
        }
        overrides.extend(self.set.iter().cloned());
        Ok(base.with_overrides(&overrides)?)
    }
}

pub fn load_sidecar(path: &Path) -> Result<Sidecar> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Sidecar::from_json(&text).with_context(|| format!("parsing sidecar {}", path.display()))
}
