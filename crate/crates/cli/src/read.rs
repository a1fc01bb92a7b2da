use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use scaleread::config::Config;
use scaleread::gauge::{read_scale_traced, Confidence, ReadError, Reading, RoiSource, Trace};
use scaleread::raster::io;

use crate::options::{load_sidecar, ConfigArgs};

#[derive(Args, Debug)]
pub struct ReadArgs {
    /// Image to read (PPM/PGM, or PNG when built with the `png` feature).
    pub image: PathBuf,
    /// Detection sidecar (JSON) whose first `linear_scale` box is the ROI.
    #[arg(long, value_name = "FILE")]
    pub roi: Option<PathBuf>,
    /// Dump per-stage images and diagnostics here, with the effective config.
    #[arg(long, value_name = "DIR")]
    pub debug_dir: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn run(args: ReadArgs) -> Result<u8> {
    let cfg = args.config.resolve()?;
    let sidecar = args.roi.as_deref().map(load_sidecar).transpose()?;
    let img = io::load(&args.image).with_context(|| format!("loading {}", args.image.display()))?;

    let mut trace = if args.debug_dir.is_some() {
        Trace::with_images()
    } else {
        Trace::default()
    };
    let result = read_scale_traced(&img, &cfg, sidecar.as_ref(), &mut trace);
    if let Some(dir) = &args.debug_dir {
        dump_debug(dir, &cfg, &trace, result.as_ref().err())?;
    }
    match result {
        Ok(r) => {
            println!("{}", result_line(&r));
            Ok(0)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(stage_exit_code(&e))
        }
    }
}

pub fn stage_exit_code(e: &ReadError) -> u8 {
    e.stage().exit_code() as u8
}

pub fn result_line(r: &Reading) -> String {
    let confidence = match r.confidence {
        Confidence::Low => "low",
        Confidence::Normal => "normal",
    };
    let roi = match r.diagnostics.roi.as_ref().map(|roi| roi.source) {
        Some(RoiSource::Sidecar) => "sidecar",
        Some(RoiSource::Heuristic) => "heuristic",
        None => "none",
    };
    format!(
        "value={:.4} confidence={confidence} slope={} offset={:.4} indicator_y={:.2} majors={} roi={roi}",
        r.value,
        r.relation.slope,
        r.relation.offset,
        r.indicator_y,
        r.markers.len()
    )
}

fn dump_debug(dir: &Path, cfg: &Config, trace: &Trace, err: Option<&ReadError>) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    let mut diag = serde_json::to_value(&trace.diagnostics)?;
    if let Some(e) = err {
        diag["error"] = serde_json::json!({ "stage": e.stage().name(), "message": e.to_string() });
    }
    std::fs::write(dir.join("diagnostics.json"), serde_json::to_string_pretty(&diag)?)?;
    let ext = if cfg!(feature = "png") { "png" } else { "ppm" };
    for (i, (name, img)) in trace.images.iter().flatten().enumerate() {
        io::save(dir.join(format!("{i:02}_{name}.{ext}")), img)?;
    }
    Ok(())
}
