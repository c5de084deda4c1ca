use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use fibercz::czd::{cz_decompose_1d, exceptional_set, fiberwise_decompose, verify_cz_invariants};
use fibercz::filters::{MotherFilter, ScaleLadder};
use fibercz::harness::{run_verify, Experiment, ExperimentConfig, Suite};
use fibercz::io::{load_function, write_dense_csv, write_filter_csv, write_function_csv, write_json, FunctionFile};
use fibercz::operators::{dual_t1, dual_t2, paraproduct_pi, paraproduct_t, paraproduct_t_fiberwise, ParaproductConfig};

#[derive(Parser)]
#[command(name = "fibercz", version, about = "Calderón–Zygmund decompositions and paraproducts on sampled grids")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a 1D or tensor function at threshold gamma; prints JSON.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        gamma: f64,
        /// Include the invariant report (1D input only).
        #[arg(long)]
        report: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate an operator; writes CSV.
    Apply {
        #[arg(long, value_enum)]
        op: Op,
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        h: Option<PathBuf>,
        #[arg(long)]
        j_min: Option<i32>,
        #[arg(long)]
        j_max: Option<i32>,
        /// Use ψ in both slots.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an invariant suite; prints a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment; prints a JSON report and writes CSV next to `out`.
    Sweep {
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write filter profiles as CSV.
    Filters {
        #[arg(long, value_enum, default_value = "psi")]
        kind: Kind,
        /// Dilation scale; omit for the mother profile.
        #[arg(long)]
        t: Option<f64>,
        /// Sample count of the [0, 1) grid the dilation lives on.
        #[arg(long, default_value_t = 1024)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    #[value(name = "pi")]
    Pi,
    #[value(name = "T")]
    T,
    #[value(name = "T1")]
    T1,
    #[value(name = "T2")]
    T2,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Psi,
    Phi,
}

/// Usage or configuration problems exit with 2, failed checks with 1.
enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            b = b.num_threads(n);
        }
        b.build().context("building thread pool")?
    };
    pool.install(|| dispatch(cli.command))
}

fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(path: &Path) -> anyhow::Result<FunctionFile> {
    load_function(path).with_context(|| format!("reading {}", path.display()))
}

fn required<'a>(p: &'a Option<PathBuf>, name: &str) -> anyhow::Result<&'a Path> {
    p.as_deref()
        .with_context(|| format!("--{name} is required for this operator"))
}

fn dispatch(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Decompose {
            input,
            gamma,
            report,
            out,
        } => {
            let mut w = sink(out.as_deref())?;
            match load(&input)? {
                FunctionFile::OneD(f) => {
                    let d = cz_decompose_1d(&f, gamma)?;
                    if report {
                        let r = verify_cz_invariants(&d, &f);
                        write_json(&serde_json::json!({"decomposition": d, "report": r}), &mut w)?;
                    } else {
                        write_json(&d, &mut w)?;
                    }
                }
                FunctionFile::Tensor(f) => {
                    let d = fiberwise_decompose(&f, gamma)?;
                    let e = exceptional_set(&d);
                    write_json(&serde_json::json!({"decomposition": d, "exceptionalSet": e}), &mut w)?;
                }
                FunctionFile::Dense(_) => bail!("decompose needs a 1D or tensor function"),
            }
            w.flush()?;
            Ok(Outcome::Ok)
        }
        Command::Apply {
            op,
            f,
            g,
            h,
            j_min,
            j_max,
            strict,
            out,
        } => {
            let first = load(required(&f, "f").or_else(|_| required(&h, "h"))?)?;
            let grid_x = match &first {
                FunctionFile::OneD(s) => *s.grid(),
                FunctionFile::Tensor(t) => *t.grid_x(),
                FunctionFile::Dense(d) => *d.grid_x(),
            };
            let ladder = match (j_min, j_max) {
                (Some(lo), Some(hi)) => ScaleLadder::new(lo, hi)?,
                (None, None) => ScaleLadder::for_grid(&grid_x)?,
                _ => bail!("--j-min and --j-max go together"),
            };
            let (psi, phi) = MotherFilter::standard_pair();
            let cfg = if strict {
                ParaproductConfig::strict(psi, ladder)
            } else {
                ParaproductConfig::new(psi, phi, ladder)
            };
            let mut w = sink(out.as_deref())?;
            match op {
                Op::Pi => {
                    let (FunctionFile::OneD(fv), FunctionFile::OneD(gv)) = (first, load(required(&g, "g")?)?) else {
                        bail!("pi needs 1D --f and --g");
                    };
                    write_function_csv(&paraproduct_pi(&fv, &gv, &cfg)?, &mut w)?;
                }
                Op::T => {
                    let gv = load(required(&g, "g")?)?.into_dense()?;
                    let t = match first {
                        FunctionFile::Tensor(ft) => paraproduct_t_fiberwise(&ft, &gv, &cfg)?,
                        other => paraproduct_t(&other.into_dense()?, &gv, &cfg)?,
                    };
                    write_dense_csv(&t, &mut w)?;
                }
                Op::T1 => {
                    let hv = load(required(&h, "h")?)?.into_dense()?;
                    let gv = load(required(&g, "g")?)?.into_dense()?;
                    write_dense_csv(&dual_t1(&hv, &gv, &cfg)?, &mut w)?;
                }
                Op::T2 => {
                    let fv = first.into_dense()?;
                    let hv = load(required(&h, "h")?)?.into_dense()?;
                    write_dense_csv(&dual_t2(&fv, &hv, &cfg)?, &mut w)?;
                }
            }
            w.flush()?;
            Ok(Outcome::Ok)
        }
        Command::Verify { suite, seed, out } => {
            let suite: Suite = suite.parse()?;
            let report = run_verify(suite, seed)?;
            let mut w = sink(out.as_deref())?;
            w.write_all(report.to_json()?.as_bytes())?;
            w.flush()?;
            Ok(if report.passed { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Sweep {
            experiment,
            config,
            out,
        } => {
            let experiment: Experiment = experiment.parse()?;
            let cfg = match &config {
                Some(p) => ExperimentConfig::from_json(
                    &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                )?,
                None => ExperimentConfig::default(),
            };
            let report = experiment.run(&cfg)?;
            let json = report.to_json()?;
            match out.or(cfg.out.clone()) {
                Some(path) => {
                    fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
                    let csv_path = path.with_extension("csv");
                    report.write_csv(BufWriter::new(File::create(&csv_path)?))?;
                }
                None => io::stdout().lock().write_all(json.as_bytes())?,
            }
            Ok(if report.passed { Outcome::Ok } else { Outcome::Failed })
        }
        Command::Filters { kind, t, count, out } => {
            let (psi, phi) = MotherFilter::standard_pair();
            let zeta = match kind {
                Kind::Psi => psi,
                Kind::Phi => phi,
            };
            let grid = fibercz::grid::Grid1D::spanning(0.0, 1.0, count)?;
            let mut w = sink(out.as_deref())?;
            write_filter_csv(&zeta, t.map(|t| (t, &grid)), &mut w)?;
            w.flush()?;
            Ok(Outcome::Ok)
        }
    }
}
