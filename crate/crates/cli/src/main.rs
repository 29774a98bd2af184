//! `mapc`: convergence studies, surrogate construction and evaluation, Sobol
//! reports and quadrature grid export.
//!
//! Exit codes: 0 on success, 1 for usage, configuration, parse and I/O
//! errors, 2 for numerical failures.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mapc_core::quadrature::fmt_f64;
use mapc_core::study::{run_study, OrderSpec, StudyConfig};
use mapc_core::{pce, stats, Error, Execution, MapSpec};

#[derive(Parser, Debug)]
#[command(name = "mapc", version, about = "Conformally mapped polynomial chaos surrogates")]
struct Cli {
    /// Worker threads for model evaluation and projection (0 = all cores).
    #[arg(long, global = true, env = "MAPC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a convergence study and write the CSV report.
    Study(StudyArgs),
    /// Build a surrogate for one map and order and save it as JSON.
    Project(ProjectArgs),
    /// Evaluate a saved surrogate at points, or report its moments.
    Eval(EvalArgs),
    /// Write main and total Sobol indices.
    Sobol(SobolArgs),
    /// Write the mapped tensor grid (or seeded sample points) for an external solver.
    ExportGrid(ExportArgs),
}

#[derive(Args, Debug)]
struct Overrides {
    /// Study configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Orders as a range `a-b` or a list `a,b,c`.
    #[arg(long)]
    orders: Option<String>,
    /// Comma-separated maps, e.g. `identity,sausage9`.
    #[arg(long)]
    map: Option<String>,
    /// Projection nodes per dimension, overriding `order + offset`.
    #[arg(long)]
    quad_nodes: Option<usize>,
    #[arg(long)]
    cv_samples: Option<usize>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Report path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write long-format plot data (`curve,x,y`).
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Surrogate file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the moment report.
    #[arg(long)]
    moments: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    surrogate: PathBuf,
    /// Points, one per line, coordinates separated by commas or whitespace;
    /// standard input when omitted.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Print `statistic,value_real,value_imag` moments instead of evaluating.
    #[arg(long)]
    moments: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SobolArgs {
    /// Saved surrogate.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    surrogate: Option<PathBuf>,
    /// Study configuration to project first (highest order, first map).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Export this many seeded input samples instead of the grid.
    #[arg(long, conflicts_with = "quad_nodes")]
    samples: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e
                .chain()
                .find_map(|c| c.downcast_ref::<Error>())
                .is_some_and(Error::is_numerical);
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads(cli.threads)?;
    let exec = Execution::default();
    match cli.command {
        Command::Study(a) => {
            let cfg = load_config(&a.overrides)?;
            let report = run_study(&cfg, exec)?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(a.out.as_deref(), &buf)?;
            if let Some(p) = a.plot_data {
                let mut buf = Vec::new();
                report.write_plot_data(&mut buf)?;
                emit(Some(&p), &buf)?;
            }
        }
        Command::Project(a) => {
            let cfg = load_config(&a.overrides)?;
            let (map, order) = single_target(&cfg)?;
            let s = cfg.surrogate(&map, order, exec)?;
            pce::save(&s, &a.out)?;
            if let Some(p) = a.moments {
                let mut buf = Vec::new();
                stats::write_moments_csv(&s, &mut buf)?;
                emit(Some(&p), &buf)?;
            }
        }
        Command::Eval(a) => {
            let s = pce::load(&a.surrogate)?;
            let mut buf = Vec::new();
            if a.moments {
                stats::write_moments_csv(&s, &mut buf)?;
            } else {
                let points = read_points(a.points.as_deref(), s.dimension())?;
                writeln!(buf, "index,value_real,value_imag")?;
                for (i, y) in points.iter().enumerate() {
                    let v = s
                        .evaluate(y)
                        .with_context(|| format!("evaluating point {i}"))?;
                    writeln!(buf, "{i},{},{}", fmt_f64(v.re), fmt_f64(v.im))?;
                }
            }
            emit(a.out.as_deref(), &buf)?;
        }
        Command::Sobol(a) => {
            let s = match (&a.surrogate, &a.config) {
                (Some(p), _) => pce::load(p)?,
                (None, Some(c)) => {
                    let cfg = StudyConfig::from_file(c)?;
                    let order = *cfg.orders.orders().last().expect("validated");
                    cfg.surrogate(&cfg.maps[0], order, exec)?
                }
                (None, None) => bail!("either --surrogate or --config is required"),
            };
            let mut buf = Vec::new();
            stats::write_sobol_csv(&stats::sobol_indices(&s)?, &mut buf)?;
            emit(a.out.as_deref(), &buf)?;
        }
        Command::ExportGrid(a) => {
            let cfg = load_config(&a.overrides)?;
            let mut buf = Vec::new();
            if let Some(n) = a.samples {
                let pts = cfg.joint_density()?.sample(n, cfg.seed)?;
                let header: Vec<String> = std::iter::once("index".to_string())
                    .chain((1..=cfg.dimension()).map(|j| format!("y{j}")))
                    .collect();
                writeln!(buf, "{}", header.join(","))?;
                for (i, y) in pts.iter().enumerate() {
                    let cols: Vec<String> = y.iter().map(|v| fmt_f64(*v)).collect();
                    writeln!(buf, "{i},{}", cols.join(","))?;
                }
            } else {
                let (map, order) = single_target(&cfg)?;
                cfg.grid(&map, cfg.nodes_for(order))?.write_csv(&mut buf)?;
            }
            emit(a.out.as_deref(), &buf)?;
        }
    }
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> anyhow::Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn load_config(o: &Overrides) -> anyhow::Result<StudyConfig> {
    let mut cfg = StudyConfig::from_file(&o.config)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(orders) = &o.orders {
        cfg.orders = OrderSpec::parse(orders)?;
    }
    if let Some(maps) = &o.map {
        cfg.maps = maps
            .split(',')
            .map(|m| m.parse::<MapSpec>())
            .collect::<Result<_, _>>()?;
    }
    if let Some(n) = o.quad_nodes {
        cfg.quad_nodes = Some(n);
    }
    if let Some(n) = o.cv_samples {
        cfg.cv_samples = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// First configured map and highest configured order.
fn single_target(cfg: &StudyConfig) -> anyhow::Result<(MapSpec, usize)> {
    let order = *cfg.orders.orders().last().context("no orders configured")?;
    Ok((cfg.maps[0].clone(), order))
}

fn read_points(path: Option<&Path>, dimension: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    let reader: Box<dyn BufRead> = match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Box::new(io::Cursor::new(s))
        }
    };
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = t
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(str::parse::<f64>)
            .collect();
        let y = match parsed {
            Ok(y) => y,
            // a header line
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("points line {}: {e}", i + 1)).into()),
        };
        if y.len() != dimension {
            return Err(Error::Parse(format!(
                "points line {}: {} coordinates, surrogate has {dimension}",
                i + 1,
                y.len()
            ))
            .into());
        }
        out.push(y);
    }
    Ok(out)
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(f);
            w.write_all(bytes)?;
            w.flush()?;
        }
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}
