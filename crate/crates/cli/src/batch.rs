use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use rayon::prelude::*;
use scaleread::config::Config;
use scaleread::gauge::{read_scale, Confidence, Sidecar};
use scaleread::raster::io;
use scaleread::synth::SceneManifest;
use serde::Serialize;

use crate::options::{load_sidecar, ConfigArgs};

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// Directory of images. `<stem>.roi.json` is used as the sidecar and
    /// `<stem>.json` as a ground-truth manifest when present.
    pub dir: PathBuf,
    /// Results CSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, short = 'j')]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Default, Serialize)]
pub struct Row {
    pub file: String,
    pub status: &'static str,
    pub value: Option<f64>,
    pub confidence: Option<&'static str>,
    pub slope: Option<f64>,
    pub offset: Option<f64>,
    pub stage: Option<&'static str>,
    pub error: Option<String>,
    pub truth: Option<f64>,
    pub abs_err: Option<f64>,
    pub within_tol: Option<bool>,
}

const IMAGE_EXTENSIONS: [&str; 4] = ["ppm", "pgm", "pnm", "png"];

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_image && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn companion(image: &Path, suffix: &str) -> Option<PathBuf> {
    let stem = image.file_stem()?.to_str()?;
    let p = image.with_file_name(format!("{stem}{suffix}"));
    p.is_file().then_some(p)
}

fn process(image: &Path, cfg: &Config) -> Row {
    let mut row = Row {
        file: image.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        ..Row::default()
    };
    let fail = |mut row: Row, stage: &'static str, msg: String| {
        row.status = "error";
        row.stage = Some(stage);
        row.error = Some(msg);
        row
    };
    let manifest: Option<SceneManifest> = match companion(image, ".json") {
        Some(p) => match std::fs::read_to_string(&p).map_err(anyhow::Error::from).and_then(|t| Ok(serde_json::from_str(&t)?)) {
            Ok(m) => Some(m),
            Err(e) => return fail(row, "input", format!("manifest {}: {e}", p.display())),
        },
        None => None,
    };
    let sidecar: Option<Sidecar> = match companion(image, ".roi.json").map(|p| load_sidecar(&p)).transpose() {
        Ok(s) => s,
        Err(e) => return fail(row, "input", format!("{e:#}")),
    };
    let img = match io::load(image) {
        Ok(i) => i,
        Err(e) => return fail(row, "input", e.to_string()),
    };
    row.truth = manifest.as_ref().map(|m| m.ground_truth.level);
    match read_scale(&img, cfg, sidecar.as_ref()) {
        Ok(r) => {
            row.status = "ok";
            row.value = Some(r.value);
            row.confidence = Some(match r.confidence {
                Confidence::Low => "low",
                Confidence::Normal => "normal",
            });
            row.slope = Some(r.relation.slope);
            row.offset = Some(r.relation.offset);
            if let Some(m) = &manifest {
                let err = (r.value - m.ground_truth.level).abs();
                row.abs_err = Some(err);
                row.within_tol = Some(err <= m.ground_truth.minor_step / 2.0 + 1e-9);
            }
            row
        }
        Err(e) => fail(row, e.stage().name(), e.to_string()),
    }
}

pub fn run(args: BatchArgs) -> Result<u8> {
    let cfg = args.config.resolve()?;
    let images = list_images(&args.dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .context("starting worker pool")?;
    // par_iter keeps input order in the collected rows
    let rows: Vec<Row> = pool.install(|| images.par_iter().map(|p| process(p, &cfg)).collect());

    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    if rows.is_empty() {
        w.write_record([
            "file", "status", "value", "confidence", "slope", "offset", "stage", "error", "truth", "abs_err",
            "within_tol",
        ])?;
    }
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let ok = rows.iter().filter(|r| r.status == "ok").count();
    let scored: Vec<&Row> = rows.iter().filter(|r| r.truth.is_some()).collect();
    let within = scored.iter().filter(|r| r.within_tol == Some(true)).count();
    eprintln!(
        "summary images={} read={ok} failed={} scored={} within_tol={within}",
        rows.len(),
        rows.len() - ok,
        scored.len()
    );
    Ok(if ok > 0 { 0 } else { 1 })
}
