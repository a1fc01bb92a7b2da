use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{ArgGroup, Args, ValueEnum};
use scaleread::evalkit::{
    benchmark, export_report, read_measurements, read_series, Direction, Evaluation, Plot,
};

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Fixture {
    /// The published syringe benchmark: 24 points on a 0.2 ml grid.
    Benchmark,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["fixture", "measurements", "aspirating"])))]
pub struct EvalArgs {
    /// Built-in measurement set.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// CSV with `truth,asp,disp` columns.
    #[arg(long, value_name = "CSV")]
    pub measurements: Option<PathBuf>,
    /// CSV with `truth,measured` columns for the aspirating direction.
    #[arg(long, value_name = "CSV", requires = "dispensing")]
    pub aspirating: Option<PathBuf>,
    /// CSV with `truth,measured` columns for the dispensing direction.
    #[arg(long, value_name = "CSV", requires = "aspirating")]
    pub dispensing: Option<PathBuf>,
    /// Write metrics.csv and the SVG plots here.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Skip the SVG plots.
    #[arg(long, requires = "out")]
    pub no_plots: bool,
}

fn open(p: &PathBuf) -> Result<File> {
    File::open(p).with_context(|| format!("opening {}", p.display()))
}

pub fn run(args: EvalArgs) -> Result<u8> {
    let (asp, disp) = if args.fixture.is_some() {
        benchmark()
    } else if let Some(p) = &args.measurements {
        read_measurements(open(p)?).with_context(|| format!("reading {}", p.display()))?
    } else {
        let (a, d) = (args.aspirating.as_ref().unwrap(), args.dispensing.as_ref().unwrap());
        (
            read_series(open(a)?, Direction::Aspirating).with_context(|| format!("reading {}", a.display()))?,
            read_series(open(d)?, Direction::Dispensing).with_context(|| format!("reading {}", d.display()))?,
        )
    };
    let eval = Evaluation::new(asp, disp)?;
    print!("{}", eval.summary_table());
    if let Some(dir) = &args.out {
        let plots: &[Plot] = if args.no_plots { &[] } else { &Plot::ALL };
        for p in export_report(&eval, plots, dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(0)
}
