//! Command-line front end: `msc --input ... --out ...` and `msc generate ...`.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::gradient::validate_gradient_with_limit;
use crate::grid::GridDims;
use crate::msc::{compute_pipeline, ComputeOptions, Pipeline, StageTimings};
use crate::synth::{self, FieldKind};
use crate::volume::{write_volume, Dtype, VolumeSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_OVERFLOW: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "msc",
    version,
    about = "Morse-Smale complex of a scalar field on a regular 3D grid",
    args_conflicts_with_subcommands = true,
    subcommand_negates_reqs = true
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic volume.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Raw volume, x fastest.
    #[arg(long, required = true)]
    input: Option<PathBuf>,
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], required = true)]
    dims: Vec<usize>,
    #[arg(long, value_enum, required = true)]
    dtype: Option<DtypeArg>,
    #[arg(long)]
    big_endian: bool,
    /// Output file; `-` writes JSON to stdout. With `--format csv` this is a
    /// path prefix.
    #[arg(long, required = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write extrema segmentation volumes `<PREFIX>_min.raw` and `<PREFIX>_max.raw`.
    #[arg(long, value_name = "PATH-PREFIX")]
    labels: Option<PathBuf>,
    /// Validate the gradient and the complex before writing anything.
    #[arg(long)]
    check: bool,
    /// Worker threads; defaults to the available hardware parallelism.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], required = true)]
    dims: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = DtypeArg::F32)]
    dtype: DtypeArg,
    #[arg(long)]
    big_endian: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DtypeArg {
    U8,
    U16,
    F32,
    F64,
}

impl From<DtypeArg> for Dtype {
    fn from(d: DtypeArg) -> Self {
        match d {
            DtypeArg::U8 => Dtype::U8,
            DtypeArg::U16 => Dtype::U16,
            DtypeArg::F32 => Dtype::F32,
            DtypeArg::F64 => Dtype::F64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Ramp,
    TwoBumps,
    RandomSmooth,
    WhiteNoise,
}

impl From<KindArg> for FieldKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ramp => FieldKind::Ramp,
            KindArg::TwoBumps => FieldKind::TwoBumps,
            KindArg::RandomSmooth => FieldKind::RandomSmooth,
            KindArg::WhiteNoise => FieldKind::WhiteNoise,
        }
    }
}

/// A failure with its exit code and message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::FileSize { .. } | Error::Parse { .. } => EXIT_IO,
            Error::InvalidDims { .. } => EXIT_USAGE,
            Error::Overflow(_) => EXIT_OVERFLOW,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

/// Parses `args` (program name first) and runs. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Some(Command::Generate(g)) => generate(g),
        None => run_pipeline(cli.run),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("msc: {}", f.message);
            f.code
        }
    }
}

fn dims_of(v: &[usize]) -> Result<GridDims, Failure> {
    Ok(GridDims::new(v[0], v[1], v[2])?)
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let dims = dims_of(&args.dims)?;
    let dtype = Dtype::from(args.dtype);
    let field = synth::generate(args.kind.into(), dims, args.seed)?;
    let values = match dtype {
        Dtype::U8 => synth::rescale(field.values(), u8::MAX as f64),
        Dtype::U16 => synth::rescale(field.values(), u16::MAX as f64),
        Dtype::F32 | Dtype::F64 => field.values().to_vec(),
    };
    write_volume(&args.out, &values, dtype, args.big_endian)?;
    Ok(())
}

fn run_pipeline(args: RunArgs) -> Result<(), Failure> {
    let (Some(input), Some(dtype), Some(out)) = (args.input, args.dtype, args.out) else {
        return Err(fail(
            EXIT_USAGE,
            "--input, --dims, --dtype and --out are required",
        ));
    };
    let dims = dims_of(&args.dims)?;
    let dtype = Dtype::from(dtype);
    let spec = VolumeSpec {
        path: input,
        dims,
        dtype,
        big_endian: args.big_endian,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0) as usize)
        .build()
        .map_err(|e| fail(EXIT_USAGE, format!("cannot start thread pool: {e}")))?;
    let threads = pool.current_num_threads();

    let clock = Instant::now();
    let field = spec.read()?;
    let read_time = clock.elapsed();
    let options = ComputeOptions {
        segmentation: args.labels.is_some(),
        dtype,
    };
    let pipeline = pool.install(|| compute_pipeline(&field, options))?;

    if args.check {
        let clock = Instant::now();
        let outcome = pool.install(|| check(&pipeline));
        eprintln!("check: {:.3} s", clock.elapsed().as_secs_f64());
        outcome?;
    }

    let m = &pipeline.complex;
    match args.format {
        Format::Json if out == Path::new("-") => io::stdout()
            .lock()
            .write_all(&m.to_json())
            .map_err(|e| fail(EXIT_IO, e.to_string()))?,
        Format::Json => fs::write(&out, m.to_json())
            .map_err(|e| fail(EXIT_IO, format!("{}: {e}", out.display())))?,
        Format::Csv => {
            let stem = out.with_extension("");
            m.write_csv(&stem)?;
        }
    }
    if let Some(prefix) = &args.labels {
        m.write_labels(prefix)?;
    }

    print_timings(
        read_time.as_secs_f64(),
        &pipeline.timings,
        threads,
        m.counts(),
    );
    Ok(())
}

fn check(p: &Pipeline) -> Result<(), Failure> {
    let report = validate_gradient_with_limit(&p.gradient, usize::MAX);
    if !report.is_valid() {
        return Err(fail(
            EXIT_VALIDATION,
            format!(
                "gradient check failed: {} matching violations, closed V-paths at {:?}",
                report.matching_violations.len(),
                report.closed_vpaths
            ),
        ));
    }
    let m = &p.complex;
    if m.euler() != 1 {
        return Err(fail(
            EXIT_VALIDATION,
            format!(
                "Euler check failed: counts {:?} sum to {}",
                m.counts(),
                m.euler()
            ),
        ));
    }
    let b = m.boundary_check();
    if !b.is_clean() {
        return Err(fail(
            EXIT_VALIDATION,
            format!(
                "boundary check failed for {} pairs, first {:?}",
                b.violations.len(),
                b.violations[0]
            ),
        ));
    }
    eprintln!("check: gradient, Euler and boundary checks passed");
    Ok(())
}

fn print_timings(read: f64, t: &StageTimings, threads: usize, counts: [usize; 4]) {
    let mut err = io::stderr().lock();
    let _ = writeln!(err, "{:<14}{:>10}", "stage", "seconds");
    let _ = writeln!(err, "{:<14}{:>10.4}", "read", read);
    for (name, d) in t.stages() {
        let _ = writeln!(err, "{:<14}{:>10.4}", name, d.as_secs_f64());
    }
    let _ = writeln!(err, "{:<14}{:>10.4}", "total", t.total().as_secs_f64());
    let _ = writeln!(
        err,
        "threads {threads}; critical points {} (min {}, 1-saddle {}, 2-saddle {}, max {})",
        counts.iter().sum::<usize>(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
}
