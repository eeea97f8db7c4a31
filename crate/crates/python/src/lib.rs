//! Python bindings for the circlot distances and solvers.

use std::path::PathBuf;

use circlot::bench::{run_experiment, BenchDistance, Experiment, ExperimentConfig};
use circlot::ppm::RgbImage;
use circlot::{CostKind, Error, GroundCost, Histogram, Measure, PointMassDistribution, Topology, TransferMap};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn topology(s: &str) -> PyResult<Topology> {
    s.parse().map_err(py_err)
}

#[pyclass(name = "Histogram", module = "circlot_py", frozen)]
pub struct PyHistogram {
    inner: Histogram,
}

#[pymethods]
impl PyHistogram {
    #[new]
    #[pyo3(signature = (weights, topology = "circular"))]
    fn new(weights: Vec<f64>, topology: &str) -> PyResult<Self> {
        let inner = Histogram::new(weights, self::topology(topology)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn bins(&self) -> usize {
        self.inner.bins()
    }

    #[getter]
    fn topology(&self) -> String {
        self.inner.topology().to_string()
    }

    fn total(&self) -> f64 {
        self.inner.total()
    }

    fn normalize(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.normalize().map_err(py_err)? })
    }

    /// Circular shift by `k` bins.
    fn rotate(&self, k: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.rotate(k).map_err(py_err)? })
    }

    fn cumulative(&self) -> Vec<f64> {
        self.inner.cumulative_bins()
    }

    fn __len__(&self) -> usize {
        self.inner.bins()
    }

    fn __repr__(&self) -> String {
        format!("Histogram(bins={}, topology={})", self.inner.bins(), self.inner.topology())
    }
}

#[pyclass(name = "PointMasses", module = "circlot_py", frozen)]
pub struct PyPointMasses {
    inner: PointMassDistribution,
}

#[pymethods]
impl PyPointMasses {
    /// Positions in `[0, 1)`; masses default to uniform.
    #[new]
    #[pyo3(signature = (positions, masses = None))]
    fn new(positions: Vec<f64>, masses: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = match masses {
            Some(m) => PointMassDistribution::new(positions, m),
            None => PointMassDistribution::uniform(positions),
        }
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn positions(&self) -> Vec<f64> {
        self.inner.positions().to_vec()
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("PointMasses(len={})", self.inner.len())
    }
}

#[pyclass(name = "GroundCost", module = "circlot_py", frozen)]
pub struct PyGroundCost {
    inner: GroundCost,
}

#[pymethods]
impl PyGroundCost {
    /// `spec` is one of `power:λ`, `exp:τ`, `thresh:T`, `zeroone`.
    #[new]
    #[pyo3(signature = (spec = "power:1", topology = "circular"))]
    fn new(spec: &str, topology: &str) -> PyResult<Self> {
        let kind: CostKind = spec.parse().map_err(py_err)?;
        Ok(Self { inner: GroundCost::new(kind, self::topology(topology)?).map_err(py_err)? })
    }

    #[getter]
    fn topology(&self) -> String {
        self.inner.topology().to_string()
    }

    #[getter]
    fn is_convex(&self) -> bool {
        self.inner.is_convex_increasing()
    }

    fn __call__(&self, x: f64, y: f64) -> f64 {
        self.inner.evaluate(x, y)
    }

    fn __repr__(&self) -> String {
        format!("GroundCost({:?}, topology={})", self.inner.kind().to_string(), self.inner.topology())
    }
}

#[derive(FromPyObject)]
enum AnyMeasure<'py> {
    Hist(PyRef<'py, PyHistogram>),
    Points(PyRef<'py, PyPointMasses>),
}

impl AnyMeasure<'_> {
    fn measure(&self) -> &dyn Measure {
        match self {
            AnyMeasure::Hist(h) => &h.inner,
            AnyMeasure::Points(p) => &p.inner,
        }
    }

    fn topology(&self) -> Topology {
        match self {
            AnyMeasure::Hist(h) => h.inner.topology(),
            AnyMeasure::Points(_) => Topology::Circular,
        }
    }
}

#[derive(FromPyObject)]
enum CostArg<'py> {
    Cost(PyRef<'py, PyGroundCost>),
    Spec(String),
}

/// A cost spec string takes the topology of the first distribution.
fn resolve_cost(cost: &CostArg<'_>, f: &AnyMeasure<'_>) -> PyResult<GroundCost> {
    match cost {
        CostArg::Cost(c) => Ok(c.inner),
        CostArg::Spec(s) => {
            let kind: CostKind = s.parse().map_err(py_err)?;
            GroundCost::new(kind, f.topology()).map_err(py_err)
        }
    }
}

fn histograms<'a>(f: &'a AnyMeasure<'_>, g: &'a AnyMeasure<'_>) -> PyResult<(&'a Histogram, &'a Histogram)> {
    match (f.measure().as_histogram(), g.measure().as_histogram()) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(PyValueError::new_err("expected two Histogram objects")),
    }
}

/// Circular EMD with `|x − y|` ground distance, in bin units.
#[pyfunction]
fn cemd(f: AnyMeasure<'_>, g: AnyMeasure<'_>) -> PyResult<f64> {
    let (f, g) = histograms(&f, &g)?;
    circlot::cemd(f, g).map_err(py_err)
}

/// Returns `(distance, median)` where the median is the optimal level shift with its sign flipped.
#[pyfunction]
fn cemd_with_median(f: AnyMeasure<'_>, g: AnyMeasure<'_>) -> PyResult<(f64, f64)> {
    let (f, g) = histograms(&f, &g)?;
    circlot::cemd_with_median(f, g).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (f, g, cost = CostArg::Spec("power:1".into()), epsilon = circlot::DEFAULT_EPSILON))]
fn mk_cost(f: AnyMeasure<'_>, g: AnyMeasure<'_>, cost: CostArg<'_>, epsilon: f64) -> PyResult<f64> {
    let c = resolve_cost(&cost, &f)?;
    circlot::mk_cost(f.measure(), g.measure(), &c, epsilon).map_err(py_err)
}

/// `MK_λ`, the λ-th root of the transport cost for power costs.
#[pyfunction]
#[pyo3(signature = (f, g, cost = CostArg::Spec("power:1".into()), epsilon = circlot::DEFAULT_EPSILON))]
fn mk_distance(f: AnyMeasure<'_>, g: AnyMeasure<'_>, cost: CostArg<'_>, epsilon: f64) -> PyResult<f64> {
    let c = resolve_cost(&cost, &f)?;
    circlot::mk_distance(f.measure(), g.measure(), &c, epsilon).map_err(py_err)
}

/// Returns `(alpha, phi(alpha))` at the minimizing level shift.
#[pyfunction]
#[pyo3(signature = (f, g, cost = CostArg::Spec("power:1".into()), epsilon = circlot::DEFAULT_EPSILON))]
fn minimize_phi(f: AnyMeasure<'_>, g: AnyMeasure<'_>, cost: CostArg<'_>, epsilon: f64) -> PyResult<(f64, f64)> {
    let c = resolve_cost(&cost, &f)?;
    circlot::minimize_phi(f.measure(), g.measure(), &c, epsilon).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (f, g, alpha, cost = CostArg::Spec("power:1".into())))]
fn phi(f: AnyMeasure<'_>, g: AnyMeasure<'_>, alpha: f64, cost: CostArg<'_>) -> PyResult<f64> {
    let c = resolve_cost(&cost, &f)?;
    circlot::phi(f.measure(), g.measure(), &c, alpha).map_err(py_err)
}

#[pyclass(name = "TransportSolution", module = "circlot_py", frozen)]
pub struct PyTransportSolution {
    #[pyo3(get)]
    cost: f64,
    #[pyo3(get)]
    plan: Vec<(usize, usize, f64)>,
    #[pyo3(get)]
    source_duals: Vec<f64>,
    #[pyo3(get)]
    target_duals: Vec<f64>,
    #[pyo3(get)]
    dual_objective: f64,
}

#[pymethods]
impl PyTransportSolution {
    fn __repr__(&self) -> String {
        format!("TransportSolution(cost={}, entries={})", self.cost, self.plan.len())
    }
}

/// Exact transportation problem; works for every cost.
#[pyfunction]
#[pyo3(signature = (f, g, cost = CostArg::Spec("power:1".into())))]
fn solve_transport(f: AnyMeasure<'_>, g: AnyMeasure<'_>, cost: CostArg<'_>) -> PyResult<PyTransportSolution> {
    let c = resolve_cost(&cost, &f)?;
    let s = circlot::solve_transport(f.measure(), g.measure(), &c).map_err(py_err)?;
    Ok(PyTransportSolution {
        cost: s.cost,
        plan: s.plan.entries().to_vec(),
        dual_objective: s.dual_objective(),
        source_duals: s.source_duals,
        target_duals: s.target_duals,
    })
}

/// Optimal matching of equal-size uniform point sets; returns `(cost, sigma)`.
#[pyfunction]
#[pyo3(signature = (xs, ys, cost = CostArg::Spec("power:1".into())))]
fn solve_assignment(xs: Vec<f64>, ys: Vec<f64>, cost: CostArg<'_>) -> PyResult<(f64, Vec<usize>)> {
    let c = match cost {
        CostArg::Cost(c) => c.inner,
        CostArg::Spec(s) => GroundCost::new(s.parse().map_err(py_err)?, Topology::Circular).map_err(py_err)?,
    };
    circlot::solve_assignment(&xs, &ys, &c).map_err(py_err)
}

/// A point where no arc of the matching `sigma` crosses, if any.
#[pyfunction]
fn find_uncrossed_point(xs: Vec<f64>, ys: Vec<f64>, sigma: Vec<usize>) -> PyResult<Option<f64>> {
    circlot::find_uncrossed_point(&xs, &ys, &sigma).map_err(py_err)
}

#[pyclass(name = "TransferMap", module = "circlot_py", frozen)]
pub struct PyTransferMap {
    inner: TransferMap,
}

#[pymethods]
impl PyTransferMap {
    #[getter]
    fn shift(&self) -> f64 {
        self.inner.shift()
    }

    /// `(quantile_start, quantile_end, source, target)` per piece.
    #[getter]
    fn segments(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner.segments().iter().map(|s| (s.quantile_start, s.quantile_end, s.source, s.target)).collect()
    }

    fn apply(&self, x: f64) -> f64 {
        self.inner.apply(x)
    }

    fn transport_cost(&self, cost: PyRef<'_, PyGroundCost>) -> f64 {
        self.inner.transport_cost(&cost.inner)
    }

    fn __repr__(&self) -> String {
        format!("TransferMap(shift={}, segments={})", self.inner.shift(), self.inner.segments().len())
    }
}

/// Optimal transfer map for a convex cost; monotone on the line.
#[pyfunction]
#[pyo3(signature = (source, target, cost = CostArg::Spec("power:1".into()), epsilon = circlot::DEFAULT_EPSILON))]
fn transfer_map(
    source: AnyMeasure<'_>,
    target: AnyMeasure<'_>,
    cost: CostArg<'_>,
    epsilon: f64,
) -> PyResult<PyTransferMap> {
    let c = resolve_cost(&cost, &source)?;
    let inner = match c.topology() {
        Topology::Linear => circlot::monotone_transfer_map(source.measure(), target.measure()),
        Topology::Circular => circlot::optimal_circular_map(source.measure(), target.measure(), &c, epsilon),
    }
    .map_err(py_err)?;
    Ok(PyTransferMap { inner })
}

/// Moves the hue distribution of `source` onto that of `target` (binary PPM files).
#[pyfunction]
#[pyo3(signature = (source, target, output, bins = 360))]
fn transfer_hue(source: PathBuf, target: PathBuf, output: PathBuf, bins: usize) -> PyResult<()> {
    let s = RgbImage::read(&source).map_err(py_err)?;
    let t = RgbImage::read(&target).map_err(py_err)?;
    circlot::hue::transfer_hue(&s, &t, bins).map_err(py_err)?.write(&output).map_err(py_err)
}

/// Runs a retrieval experiment; returns `{distance: mAP}`.
#[pyfunction]
#[pyo3(name = "bench", signature = (experiment = "shift", seed = 42, per_class = None, samples = None, bins = None, distances = None))]
fn run_bench(
    py: Python<'_>,
    experiment: &str,
    seed: u64,
    per_class: Option<usize>,
    samples: Option<usize>,
    bins: Option<usize>,
    distances: Option<Vec<String>>,
) -> PyResult<Vec<(String, f64)>> {
    let exp: Experiment = experiment.parse().map_err(py_err)?;
    let mut config = ExperimentConfig::new(exp, seed);
    config.per_class = per_class.unwrap_or(config.per_class);
    config.n_samples = samples.unwrap_or(config.n_samples);
    config.bins = bins.unwrap_or(config.bins);
    if let Some(ds) = distances {
        config.distances =
            ds.iter().map(|d| d.parse::<BenchDistance>()).collect::<Result<_, _>>().map_err(py_err)?;
    }
    let results = py.detach(|| run_experiment(&config)).map_err(py_err)?;
    Ok(results.into_iter().map(|r| (r.distance, r.mean_average_precision)).collect())
}

/// Returns `(passed, max_deviation)` over `trials` random cases.
#[pyfunction]
#[pyo3(signature = (trials = 200, seed = 7))]
fn selftest(py: Python<'_>, trials: usize, seed: u64) -> PyResult<(bool, f64)> {
    let report = py.detach(|| circlot::selftest::run_selftest(trials, seed)).map_err(py_err)?;
    Ok((report.passed(), report.max_deviation()))
}

#[pymodule]
fn circlot_py(_py: Python, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHistogram>()?;
    m.add_class::<PyPointMasses>()?;
    m.add_class::<PyGroundCost>()?;
    m.add_class::<PyTransportSolution>()?;
    m.add_class::<PyTransferMap>()?;
    m.add_function(wrap_pyfunction!(cemd, m)?)?;
    m.add_function(wrap_pyfunction!(cemd_with_median, m)?)?;
    m.add_function(wrap_pyfunction!(mk_cost, m)?)?;
    m.add_function(wrap_pyfunction!(mk_distance, m)?)?;
    m.add_function(wrap_pyfunction!(minimize_phi, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(solve_transport, m)?)?;
    m.add_function(wrap_pyfunction!(solve_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(find_uncrossed_point, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_map, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_hue, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
