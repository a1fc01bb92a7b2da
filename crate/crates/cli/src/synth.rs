use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scaleread::raster::{io, Angle};
use scaleread::synth::{preset, render_scale, with_axis, PresetKind, SceneManifest, ScaleSpec, SweepAxis};

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Scene preset: syringe or cylinder.
    #[arg(long, default_value = "syringe")]
    pub preset: PresetKind,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Level in scale units.
    #[arg(long)]
    pub level: Option<f64>,
    /// Scene rotation in degrees, counter-clockwise.
    #[arg(long, allow_hyphen_values = true)]
    pub rotation: Option<f64>,
    #[arg(long)]
    pub scale_factor: Option<f64>,
    /// Gaussian pixel noise, in gray levels.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Scatter marker-colored shapes outside the scale.
    #[arg(long)]
    pub clutter: bool,
    /// Vary one axis: `rotation=-60:60:30`, `level=0.2,1.4` and so on.
    #[arg(long, value_name = "AXIS=VALUES", allow_hyphen_values = true, conflicts_with = "random")]
    pub sweep: Option<String>,
    /// Render N scenes with random pose and level.
    #[arg(long, value_name = "N")]
    pub random: Option<usize>,
}

pub fn run(args: SynthArgs) -> Result<u8> {
    let mut base = preset(args.preset);
    if let Some(v) = args.level {
        base.level = v;
    }
    if let Some(v) = args.rotation {
        base.rotation = Angle::degrees(v);
    }
    if let Some(v) = args.scale_factor {
        base.scale_factor = v;
    }
    if let Some(v) = args.noise {
        base.noise_sigma = v;
    }
    base.clutter |= args.clutter;
    let stem = format!("{:?}", args.preset).to_lowercase();

    let scenes: Vec<(String, ScaleSpec, u64)> = if let Some(sweep) = &args.sweep {
        let (axis, values) = parse_sweep(sweep)?;
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (format!("{stem}_{i:03}"), with_axis(&base, axis, v), args.seed))
            .collect()
    } else if let Some(n) = args.random {
        (0..n)
            .map(|i| {
                let seed = args.seed + i as u64;
                (format!("{stem}_{i:03}"), random_scene(&base, seed), seed)
            })
            .collect()
    } else {
        vec![(stem, base, args.seed)]
    };

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for (name, spec, seed) in &scenes {
        let written = write_scene(&args.out, name, spec, *seed)?;
        println!("{}", written.display());
    }
    Ok(0)
}

/// Random pose (rotation within 60 degrees, size factor 0.6 to 1.5) and a level
/// on the minor grid.
fn random_scene(base: &ScaleSpec, seed: u64) -> ScaleSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = base.clone();
    s.rotation = Angle::degrees(rng.random_range(-60.0..=60.0));
    s.scale_factor = rng.random_range(0.6..=1.5);
    let steps = (s.max_value() / s.minor_step()).round() as u32;
    s.level = rng.random_range(0..=steps) as f64 * s.minor_step();
    s
}

fn write_scene(dir: &Path, name: &str, spec: &ScaleSpec, seed: u64) -> Result<PathBuf> {
    let (img, gt) = render_scale(spec, seed).with_context(|| format!("rendering {name}"))?;
    let image = format!("{name}.ppm");
    let path = dir.join(&image);
    io::save(&path, &img)?;
    let manifest = SceneManifest {
        image,
        seed,
        scene: spec.clone(),
        ground_truth: gt,
    };
    std::fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// `axis=start:end:step` (end inclusive) or `axis=v1,v2,...`.
pub fn parse_sweep(s: &str) -> Result<(SweepAxis, Vec<f64>)> {
    let (axis, rest) = s.split_once('=').context("sweep must look like axis=values")?;
    let axis: SweepAxis = axis.trim().parse().map_err(anyhow::Error::msg)?;
    let num = |t: &str| t.trim().parse::<f64>().with_context(|| format!("bad number `{t}` in sweep"));
    let values = if rest.contains(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        let [start, end, step] = parts[..] else {
            bail!("range sweep needs start:end:step");
        };
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if !(step > 0.0) || end < start {
            bail!("range sweep needs end >= start and a positive step");
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + step * i as f64).collect()
    } else {
        rest.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        bail!("sweep has no values");
    }
    Ok((axis, values))
}
