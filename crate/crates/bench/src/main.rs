use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svrg_bench::config::{Accounting, Model, Optimizer, RunConfig, SyntheticKind, SyntheticSpec};
use svrg_bench::error::{BenchError, BenchResult};
use svrg_bench::problem::{label_map, load_data, stream};
use svrg_bench::train::{cmd_train, write_atomic};
use svrg_bench::tune::cmd_tune;
use svrg_bench::verify_suite::{cmd_verify, FaultInjection};
use svrg_core::data::{read_libsvm_file, write_libsvm, Dataset, LabelMap};
use svrg_core::rng::RandomSource;

#[derive(Parser)]
#[command(name = "svrg-bench", version, about = "Benchmark harness for variance-reduced nonconvex optimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (trace, log, report or data file depending on the command).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel work.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct RunOverrides {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_enum::<Optimizer>)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    passes: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    flip_fraction: Option<f64>,
    #[arg(long, value_parser = parse_enum::<Accounting>)]
    accounting: Option<Accounting>,
    /// Record elapsed seconds in the trace (makes traces non-reproducible).
    #[arg(long)]
    wall_clock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer and write its convergence trace.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run a tuning grid and report the selected cell.
    Tune {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: RunOverrides,
        /// Repeats per grid cell.
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Check the library's invariants and write a JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Scale the sigmoid loss in the smoothness check (a deliberate fault).
        #[arg(long, default_value_t = 1.0)]
        inject_sigmoid_scale: f64,
    },
    /// Flip a fraction of binary labels in a LibSVM file.
    Flip {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        fraction: f64,
    },
    /// Split a LibSVM file into training and holdout parts.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        /// Holdout output; `<out>.holdout` by default.
        #[arg(long)]
        holdout: Option<PathBuf>,
        /// Treat labels as classes `1..=C` (after adding `offset`).
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        offset: i64,
    },
    /// Write a generated dataset in LibSVM format.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_enum::<SyntheticKind>, default_value = "gaussian")]
        kind: SyntheticKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        d: usize,
        #[arg(long, default_value_t = 10)]
        classes: usize,
    },
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    T::deserialize(serde::de::value::StrDeserializer::<serde::de::value::Error>::new(s)).map_err(|e| e.to_string())
}

fn load_config(common: &Common, o: &RunOverrides) -> BenchResult<RunConfig> {
    let mut c = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        c.seed = s;
    }
    if let Some(t) = common.threads {
        c.threads = Some(t);
    }
    if let Some(d) = &o.dataset {
        c.dataset = Some(d.clone());
        c.synthetic = None;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = o.$field.clone() {
                c.$field = v.into();
            }
        )*};
    }
    set!(optimizer, loss, lambda, flip_fraction, accounting);
    if o.batch_size.is_some() {
        c.batch_size = o.batch_size;
    }
    if o.epochs.is_some() {
        c.epochs = o.epochs;
    }
    if o.passes.is_some() {
        c.passes = o.passes;
    }
    if o.m.is_some() {
        c.m = o.m;
    }
    if o.m0.is_some() {
        c.m0 = o.m0;
    }
    if o.eta.is_some() {
        c.eta = o.eta;
    }
    c.wall_clock |= o.wall_clock;
    Ok(c)
}

fn init_threads(threads: Option<usize>) -> BenchResult<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| BenchError::Config(format!("cannot start {t} worker threads: {e}")))?;
    }
    Ok(())
}

fn write_dataset(path: &Path, ds: &Dataset) -> BenchResult<()> {
    let mut buf = Vec::new();
    write_libsvm(ds, &mut buf)?;
    write_atomic(path, &buf)
}

fn require_out(common: &Common) -> BenchResult<&Path> {
    common.out.as_deref().ok_or_else(|| BenchError::Config("--out is required".into()))
}

fn run(cli: Cli) -> BenchResult<()> {
    match cli.command {
        Command::Train { common, overrides } => {
            let mut c = load_config(&common, &overrides)?;
            if let Some(out) = &common.out {
                c.trace = Some(out.clone());
            }
            init_threads(c.threads)?;
            let s = cmd_train(&c)?;
            println!("final objective:     {}", s.final_objective);
            println!("final ||grad f||^2:  {}", s.final_grad_norm_sq);
            println!("passes:              {}", s.passes);
            println!("wall time (s):       {:.3}", s.wall_seconds);
            if let Some(p) = &s.trace_path {
                println!("trace:               {}", p.display());
            }
        }
        Command::Tune { common, overrides, seeds } => {
            let mut c = load_config(&common, &overrides)?;
            if let Some(out) = &common.out {
                c.tune.log = Some(out.clone());
            }
            if let Some(s) = seeds {
                c.tune.seeds = s;
            }
            init_threads(c.threads)?;
            let r = cmd_tune(&c)?;
            let diverged = r.cells.iter().filter(|x| x.diverged).count();
            println!("cells: {} ({} diverged)", r.cells.len(), diverged);
            let b = &r.best;
            println!("best cell {}: lambda={} alpha={}", b.cell, b.lambda, b.alpha);
            if let Some(e) = b.exponent {
                println!("  exponent={e}");
            }
            println!("  final objective {}  ||grad f||^2 {}", b.final_objective, b.final_grad_norm_sq);
            if let Some(a) = b.validation_accuracy {
                println!("  validation accuracy {a:.4}");
            }
            if let Some(a) = r.test_accuracy {
                println!("  test accuracy {a:.4}");
            }
        }
        Command::Verify { common, inject_sigmoid_scale } => {
            init_threads(common.threads)?;
            let report = cmd_verify(common.seed.unwrap_or(0), FaultInjection { sigmoid_scale: inject_sigmoid_scale })?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            match &common.out {
                Some(p) => write_atomic(p, json.as_bytes())?,
                None => println!("{json}"),
            }
            if !report.passed {
                return Err(BenchError::VerifyFailed(report.failed_checks().join(", ")));
            }
        }
        Command::Flip { common, input, fraction } => {
            let ds = read_libsvm_file(&input, &LabelMap::Auto)?;
            let mut rng = RandomSource::new(common.seed.unwrap_or(0)).fork(stream::FLIP);
            write_dataset(require_out(&common)?, &ds.flip_labels(fraction, &mut rng)?)?;
        }
        Command::Split { common, input, train_fraction, holdout, classes, offset } => {
            let map = match classes {
                Some(classes) => LabelMap::Multiclass { classes, offset },
                None => LabelMap::Auto,
            };
            let ds = read_libsvm_file(&input, &map)?;
            let mut rng = RandomSource::new(common.seed.unwrap_or(0)).fork(stream::SPLIT);
            let (train, rest) = ds.split(train_fraction, &mut rng)?;
            let out = require_out(&common)?;
            let holdout = holdout.unwrap_or_else(|| {
                let mut p = out.as_os_str().to_owned();
                p.push(".holdout");
                PathBuf::from(p)
            });
            write_dataset(out, &train)?;
            write_dataset(&holdout, &rest)?;
        }
        Command::Synth { common, kind, n, d, classes } => {
            let model = if kind == SyntheticKind::Clusters { Model::Net } else { Model::Erm };
            let c = RunConfig {
                model,
                synthetic: Some(SyntheticSpec { kind, n, d, classes, seed: common.seed.unwrap_or(0) }),
                ..RunConfig::default()
            };
            let _ = label_map(&c.labels, model)?;
            write_dataset(require_out(&common)?, &load_data(&c)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

