use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use circlot::bench::{run_experiment, write_results, BenchDistance, Experiment, ExperimentConfig};
use circlot::hue::{transfer_hue, DEFAULT_HUE_BINS};
use circlot::io::{read_histogram, read_points, write_map_csv, write_plan_csv};
use circlot::line::root;
use circlot::oracle::solve_transport_capped;
use circlot::ppm::RgbImage;
use circlot::selftest::run_selftest;
use circlot::{
    cemd_with_median, minimize_phi, mk_cost, monotone_transfer_map, optimal_circular_map,
    CostKind, GroundCost, Histogram, Measure, PointMassDistribution, Topology, TransferMap, DEFAULT_EPSILON,
};

#[derive(Parser)]
#[command(name = "circlot", version, about = "Optimal transport distances on the line and the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transport distance between two distributions
    Dist(DistArgs),
    /// Exact transport cost and plan from the flow solver
    Oracle(OracleArgs),
    /// Remap the hues of an image onto those of another
    TransferHue(HueArgs),
    /// Synthetic two-class retrieval benchmark
    Bench(BenchArgs),
    /// Check the fast solvers against the exact ones on random inputs
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Units {
    Bins,
    Perimeter,
}

impl Units {
    fn name(self) -> &'static str {
        match self {
            Units::Bins => "bins",
            Units::Perimeter => "perimeter",
        }
    }
}

#[derive(Args)]
struct Inputs {
    f: PathBuf,
    g: PathBuf,
    /// linear or circular; defaults to the file header, then circular
    #[arg(long)]
    topology: Option<Topology>,
    /// power:LAMBDA, exp:TAU, thresh:T or zeroone
    #[arg(long, default_value = "power:1")]
    cost: CostKind,
    /// Read `position,mass` files instead of histograms
    #[arg(long)]
    points: bool,
    /// Distance units; bins for histograms and perimeter for points by default
    #[arg(long, value_enum)]
    units: Option<Units>,
    /// Same as `--units perimeter`
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DistArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Precision of the shift search on the circle
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Write the optimal transfer map as CSV
    #[arg(long)]
    emit_map: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Write the plan's nonzero entries as CSV
    #[arg(long)]
    emit_plan: Option<PathBuf>,
    /// Largest accepted number of cost matrix entries
    #[arg(long, default_value_t = circlot::oracle::DEFAULT_SIZE_CAP)]
    cap: usize,
}

#[derive(Args)]
struct HueArgs {
    source: PathBuf,
    target: PathBuf,
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HUE_BINS)]
    bins: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// shift, weight or plain
    #[arg(long, default_value = "shift")]
    experiment: Experiment,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Half-width of the uniform perturbation
    #[arg(long, default_value_t = 0.1)]
    half_width: f64,
    /// Comma-separated list such as `l1,mk1,mk2,exp2,t2`; all by default
    #[arg(long, value_delimiter = ',')]
    distances: Option<Vec<BenchDistance>>,
    /// Directory for `pr_<distance>.csv` and `summary.csv`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Bad flags, unreadable or malformed inputs.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load<T>(r: circlot::Result<T>, path: &Path) -> Result<T> {
    r.map_err(|e| usage(format!("{}: {e}", path.display())))
}

enum Pair {
    Hist(Histogram, Histogram),
    Points(PointMassDistribution, PointMassDistribution),
}

struct Problem {
    pair: Pair,
    topology: Topology,
    units: Units,
    /// Cost acting on the natural units of the inputs.
    cost: GroundCost,
    /// Converts a raw cost in natural units to the requested units.
    factor: f64,
}

/// Cost parameters given in perimeter units, re-expressed in bin units, with
/// the factor turning the bin-unit cost into the perimeter-unit cost.
fn perimeter_to_bins(kind: CostKind, n: f64) -> (CostKind, f64) {
    match kind {
        CostKind::ConvexPower { lambda } => (kind, n.powf(-lambda)),
        CostKind::Exponential { tau } => (CostKind::Exponential { tau: tau * n }, 1.0),
        CostKind::Thresholded { threshold } => (CostKind::Thresholded { threshold: threshold * n }, 1.0 / n),
        CostKind::ZeroOne => (kind, 1.0),
    }
}

impl Inputs {
    fn problem(&self) -> Result<Problem> {
        let requested = match (self.units, self.normalize) {
            (Some(Units::Bins), true) => return Err(usage("--normalize conflicts with --units bins")),
            (_, true) => Some(Units::Perimeter),
            (u, false) => u,
        };
        if self.points {
            let units = requested.unwrap_or(Units::Perimeter);
            if units == Units::Bins {
                return Err(usage("point masses have no bins; use --units perimeter"));
            }
            let f = load(read_points(&self.f), &self.f)?;
            let g = load(read_points(&self.g), &self.g)?;
            let topology = self.topology.unwrap_or(Topology::Circular);
            let cost = GroundCost::new(self.cost, topology)?;
            return Ok(Problem { pair: Pair::Points(f, g), topology, units, cost, factor: 1.0 });
        }
        let default = self.topology.unwrap_or(Topology::Circular);
        let mut f = load(read_histogram(&self.f, default), &self.f)?;
        let mut g = load(read_histogram(&self.g, default), &self.g)?;
        if let Some(t) = self.topology {
            f = f.with_topology(t);
            g = g.with_topology(t);
        }
        if f.topology() != g.topology() {
            return Err(usage("the two files declare different topologies"));
        }
        let topology = f.topology();
        let units = requested.unwrap_or(Units::Bins);
        let (kind, factor) = match units {
            Units::Bins => (self.cost, 1.0),
            Units::Perimeter => perimeter_to_bins(self.cost, f.bins() as f64),
        };
        let cost = GroundCost::new(kind, topology)?;
        Ok(Problem { pair: Pair::Hist(f, g), topology, units, cost, factor })
    }
}

fn run_dist(args: &DistArgs) -> Result<()> {
    let p = args.inputs.problem()?;
    let (raw, shift) = match &p.pair {
        Pair::Hist(f, g) => (mk_cost(f, g, &p.cost, args.epsilon)?, optimal_shift(f, g, &p, args.epsilon)?),
        Pair::Points(f, g) => (mk_cost(f, g, &p.cost, args.epsilon)?, optimal_shift(f, g, &p, args.epsilon)?),
    };
    let distance = root(raw * p.factor, &p.cost);
    if let Some(path) = &args.emit_map {
        if !p.cost.is_convex_increasing() {
            return Err(usage("--emit-map needs a convex power cost"));
        }
        let map = match &p.pair {
            Pair::Hist(f, g) => transfer_map(f, g, &p, args.epsilon)?,
            Pair::Points(f, g) => transfer_map(f, g, &p, args.epsilon)?,
        };
        let out = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_map_csv(&map, BufWriter::new(out))?;
    }
    if args.inputs.json {
        let (kind, value) = match shift {
            Some((k, v)) => (json!(k), json!(v)),
            None => (json!(null), json!(null)),
        };
        println!(
            "{}",
            json!({ "distance": distance, "alpha_or_mu": value, "shift_kind": kind, "units": p.units.name() })
        );
    } else {
        println!("{distance}");
    }
    Ok(())
}

/// The minimizing shift on the circle: the median `mu` for the circular EMD
/// of histograms, the shift `alpha` otherwise.
fn optimal_shift<M: Measure + ?Sized>(
    f: &M,
    g: &M,
    p: &Problem,
    epsilon: f64,
) -> Result<Option<(&'static str, f64)>> {
    if p.topology != Topology::Circular || !p.cost.is_convex_increasing() {
        return Ok(None);
    }
    if p.cost.lambda() == Some(1.0) {
        if let (Some(fh), Some(gh)) = (f.as_histogram(), g.as_histogram()) {
            return Ok(Some(("mu", cemd_with_median(fh, gh)?.1)));
        }
    }
    Ok(Some(("alpha", minimize_phi(f, g, &p.cost, epsilon)?.0)))
}

fn transfer_map<M: Measure + ?Sized>(f: &M, g: &M, p: &Problem, epsilon: f64) -> Result<TransferMap> {
    Ok(match p.topology {
        Topology::Linear => monotone_transfer_map(f, g)?,
        Topology::Circular => optimal_circular_map(f, g, &p.cost, epsilon)?,
    })
}

fn run_oracle(args: &OracleArgs) -> Result<()> {
    let p = args.inputs.problem()?;
    let (solution, unit_cost): (_, Box<dyn Fn(usize, usize) -> f64>) = match &p.pair {
        Pair::Hist(f, g) => {
            let n = f.bins();
            let cost = p.cost;
            (solve_transport_capped(f, g, &p.cost, args.cap)?, Box::new(move |i, j| cost.evaluate_bins(i, j, n)))
        }
        Pair::Points(f, g) => {
            let (xs, ys) = (f.positions().to_vec(), g.positions().to_vec());
            let cost = p.cost;
            (solve_transport_capped(f, g, &p.cost, args.cap)?, Box::new(move |i, j| cost.evaluate(xs[i], ys[j])))
        }
    };
    let cost = solution.cost * p.factor;
    if let Some(path) = &args.emit_plan {
        let out = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_plan_csv(&solution.plan, |i, j| unit_cost(i, j) * p.factor, BufWriter::new(out))?;
    }
    if args.inputs.json {
        println!("{}", json!({ "cost": cost, "units": p.units.name() }));
    } else {
        println!("{cost}");
    }
    Ok(())
}

fn run_hue(args: &HueArgs) -> Result<()> {
    let source = load(RgbImage::read(&args.source), &args.source)?;
    let target = load(RgbImage::read(&args.target), &args.target)?;
    let out = transfer_hue(&source, &target, args.bins)?;
    out.write(&args.output).with_context(|| format!("writing {}", args.output.display()))?;
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let mut config = ExperimentConfig::new(args.experiment, args.seed);
    config.per_class = args.per_class;
    config.n_samples = args.samples;
    config.bins = args.bins;
    config.half_width = args.half_width;
    if let Some(d) = &args.distances {
        config.distances = d.clone();
    }
    let results = run_experiment(&config)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "distance,mAP,wall_time_ms")?;
    for r in &results {
        writeln!(out, "{},{:.6},{:.3}", r.distance, r.mean_average_precision, r.wall_time_ms)?;
    }
    if let Some(dir) = &args.out {
        write_results(&results, dir)?;
    }
    Ok(())
}

fn run_selftest_cmd(args: &SelftestArgs) -> Result<()> {
    let report = run_selftest(args.trials, args.seed)?;
    for c in &report.checks {
        println!("{c}");
    }
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!("{verdict}: max deviation {:.3e} over {} trials (seed {})", report.max_deviation(), args.trials, args.seed);
    if !report.passed() {
        bail!("selftest found disagreements");
    }
    Ok(())
}

/// Worker count from `CIRCLOT_THREADS`; 0 or unset leaves the default.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CIRCLOT_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| usage(format!("CIRCLOT_THREADS: `{raw}` is not a count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| anyhow!(e))?;
        log::debug!("using {n} worker threads");
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use circlot::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() || cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Format(_) | E::Io(_) | E::InvalidCost(_) | E::UnknownDistance(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Dist(a) => run_dist(a),
        Command::Oracle(a) => run_oracle(a),
        Command::TransferHue(a) => run_hue(a),
        Command::Bench(a) => run_bench(a),
        Command::Selftest(a) => run_selftest_cmd(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
