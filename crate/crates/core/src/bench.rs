//! Synthetic two-class retrieval benchmark.
//!
//! Each class is a mixture of two Gaussians on `[0, 1)`. Histograms are
//! drawn from randomly perturbed class parameters, every histogram queries
//! all others, and rankings are scored by precision, recall and mean
//! average precision.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::circle::{cemd, mk_circle};
use crate::cost::GroundCost;
use crate::error::{Error, Result};
use crate::histogram::{Histogram, Topology};
use crate::line::{emd_line_histograms, root};
use crate::oracle::{half_l1, mk_concave};

/// Weight `p` on the first Gaussian, `1 − p` on the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureParams {
    pub p: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl MixtureParams {
    pub fn new(p: f64, mu1: f64, mu2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        let all_finite = [p, mu1, mu2, sigma1, sigma2].iter().all(|v| v.is_finite());
        if !all_finite || !(0.0..=1.0).contains(&p) || sigma1 <= 0.0 || sigma2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mixture p={p} mu=({mu1}, {mu2}) sigma=({sigma1}, {sigma2})"
            )));
        }
        Ok(Self { p, mu1, mu2, sigma1, sigma2 })
    }

    /// Class A of the shift and weight experiments.
    pub fn class_a() -> Self {
        Self { p: 0.6, mu1: 0.2, mu2: 0.7, sigma1: 0.05, sigma2: 0.05 }
    }

    /// Class B of the shift and weight experiments.
    pub fn class_b() -> Self {
        Self { p: 0.8, mu1: 0.2, mu2: 0.7, sigma1: 0.05, sigma2: 0.05 }
    }
}

/// Random perturbation applied to the class parameters of each histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationModel {
    None,
    /// `μ₁ += U[−w, w]`, clamped to `[0, 1)`.
    Shift { half_width: f64 },
    /// `p += U[−w, w]`, kept inside `(0, 1)`.
    Weight { half_width: f64 },
}

impl PerturbationModel {
    pub fn apply<R: Rng + ?Sized>(&self, params: &MixtureParams, rng: &mut R) -> MixtureParams {
        let mut out = *params;
        match *self {
            PerturbationModel::None => {}
            PerturbationModel::Shift { half_width } => {
                let e = rng.random_range(-half_width..=half_width);
                out.mu1 = (params.mu1 + e).clamp(0.0, 1.0 - f64::EPSILON);
            }
            PerturbationModel::Weight { half_width } => {
                let e = rng.random_range(-half_width..=half_width);
                out.p = (params.p + e).clamp(1e-9, 1.0 - 1e-9);
            }
        }
        out
    }
}

fn sample_with<R: Rng + ?Sized>(
    params: &MixtureParams,
    n_samples: usize,
    bins: usize,
    rng: &mut R,
) -> Result<Histogram> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if bins < 2 {
        return Err(Error::TooFewBins);
    }
    let first = Normal::new(params.mu1, params.sigma1)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let second = Normal::new(params.mu2, params.sigma2)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut counts = vec![0u32; bins];
    for _ in 0..n_samples {
        // out-of-range draws are redrawn
        let x = loop {
            let x = if rng.random::<f64>() < params.p { first.sample(rng) } else { second.sample(rng) };
            if (0.0..1.0).contains(&x) {
                break x;
            }
        };
        counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n = n_samples as f64;
    Histogram::circular(counts.into_iter().map(|c| c as f64 / n).collect())?.normalize()
}

/// Bins `n_samples` draws from the mixture into a normalized circular
/// histogram. Deterministic in `seed`.
pub fn sample_histogram(params: &MixtureParams, n_samples: usize, bins: usize, seed: u64) -> Result<Histogram> {
    sample_with(params, n_samples, bins, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone)]
pub struct LabeledHistogram {
    pub histogram: Histogram,
    pub label: usize,
}

/// `per_class` perturbed histograms of class A (label 0), then of class B
/// (label 1).
pub fn generate_database(
    class_a: &MixtureParams,
    class_b: &MixtureParams,
    perturbation: PerturbationModel,
    per_class: usize,
    n_samples: usize,
    bins: usize,
    seed: u64,
) -> Result<Vec<LabeledHistogram>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * per_class);
    for (label, params) in [class_a, class_b].into_iter().enumerate() {
        for _ in 0..per_class {
            let p = perturbation.apply(params, &mut rng);
            out.push(LabeledHistogram { histogram: sample_with(&p, n_samples, bins, &mut rng)?, label });
        }
    }
    Ok(out)
}

/// Distances compared by the benchmark. Transport costs are in bin units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchDistance {
    /// `½ Σ |f − g|`.
    L1,
    /// Linear EMD, cutting the circle at bin 0.
    Emd,
    /// `MK_λ` on the circle.
    Mk(f64),
    /// `MK` with `h(t) = 1 − exp(−t/τ)`.
    Exp(f64),
    /// `MK` with `h(t) = min(t, T)`.
    Thresh(f64),
}

impl BenchDistance {
    /// The default comparison set.
    pub fn standard() -> Vec<Self> {
        use BenchDistance::*;
        vec![L1, Mk(1.0), Mk(2.0), Mk(3.0), Exp(1.0), Exp(2.0), Exp(5.0), Thresh(2.0), Thresh(10.0)]
    }

    pub fn compute(&self, f: &Histogram, g: &Histogram) -> Result<f64> {
        let c = Topology::Circular;
        match *self {
            BenchDistance::L1 => Ok(half_l1(f.weights(), g.weights())),
            BenchDistance::Emd => emd_line_histograms(f, g),
            BenchDistance::Mk(l) if l == 1.0 => cemd(f, g),
            BenchDistance::Mk(l) => {
                let cost = GroundCost::power(l, c)?;
                Ok(root(mk_circle(f, g, &cost, crate::DEFAULT_EPSILON)?, &cost))
            }
            BenchDistance::Exp(tau) => mk_concave(f, g, &GroundCost::exponential(tau, c)?),
            BenchDistance::Thresh(t) => mk_concave(f, g, &GroundCost::thresholded(t, c)?),
        }
    }
}

impl fmt::Display for BenchDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchDistance::L1 => f.write_str("l1"),
            BenchDistance::Emd => f.write_str("emd"),
            BenchDistance::Mk(l) => write!(f, "mk{l}"),
            BenchDistance::Exp(t) => write!(f, "exp{t}"),
            BenchDistance::Thresh(t) => write!(f, "t{t}"),
        }
    }
}

/// Parses `l1`, `emd`, `mkL`, `expTAU` and `tT` (e.g. `mk2`, `exp5`, `t10`).
impl FromStr for BenchDistance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let num = |rest: &str| rest.parse::<f64>().ok().filter(|v| v.is_finite() && *v > 0.0);
        let d = match s.as_str() {
            "l1" => Some(BenchDistance::L1),
            "emd" => Some(BenchDistance::Emd),
            _ => {
                if let Some(r) = s.strip_prefix("mk") {
                    num(r).filter(|l| *l >= 1.0).map(BenchDistance::Mk)
                } else if let Some(r) = s.strip_prefix("exp") {
                    num(r).map(BenchDistance::Exp)
                } else if let Some(r) = s.strip_prefix('t') {
                    num(r).map(BenchDistance::Thresh)
                } else {
                    None
                }
            }
        };
        d.ok_or(Error::UnknownDistance(s))
    }
}

/// Row-major `n × n` matrix of pairwise distances, computed in parallel.
pub fn distance_matrix(db: &[LabeledHistogram], distance: BenchDistance) -> Result<Vec<f64>> {
    let n = db.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| distance.compute(&db[i].histogram, &db[j].histogram))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (k, d) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    Ok(out)
}

/// Recall and precision at every rank `r = 1..=ranked.len()` for one query.
///
/// Recall divides the hits among the first `r` by the number of other items
/// in the query's class; precision divides them by `r`.
pub fn precision_recall(query: usize, ranked: &[usize], labels: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let label = labels[query];
    let relevant = labels.iter().enumerate().filter(|&(k, &l)| k != query && l == label).count();
    let mut hits = 0usize;
    let mut recall = Vec::with_capacity(ranked.len());
    let mut precision = Vec::with_capacity(ranked.len());
    for (r, &item) in ranked.iter().enumerate() {
        if labels[item] == label {
            hits += 1;
        }
        recall.push(if relevant == 0 { 1.0 } else { hits as f64 / relevant as f64 });
        precision.push(hits as f64 / (r + 1) as f64);
    }
    (recall, precision)
}

/// Mean of the precision values at the ranks of the relevant items.
pub fn average_precision(query: usize, ranked: &[usize], labels: &[usize]) -> f64 {
    let label = labels[query];
    let (mut hits, mut acc) = (0usize, 0.0);
    for (r, &item) in ranked.iter().enumerate() {
        if labels[item] == label {
            hits += 1;
            acc += hits as f64 / (r + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        acc / hits as f64
    }
}

/// All other items sorted by increasing distance, ties broken by index.
pub fn rank(matrix: &[f64], n: usize, query: usize) -> Vec<usize> {
    let row = &matrix[query * n..(query + 1) * n];
    let mut items: Vec<usize> = (0..n).filter(|&k| k != query).collect();
    items.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
    items
}

/// Curves averaged over every query of the database.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub distance: String,
    /// Index `r − 1` holds the value at rank `r`.
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
    pub mean_average_precision: f64,
    pub wall_time_ms: f64,
}

/// Ranks the database under a distance matrix and averages the curves.
pub fn evaluate_matrix(name: &str, matrix: &[f64], labels: &[usize], wall_time_ms: f64) -> RetrievalResult {
    let n = labels.len();
    let mut recall = vec![0.0; n.saturating_sub(1)];
    let mut precision = vec![0.0; n.saturating_sub(1)];
    let mut map = 0.0;
    for q in 0..n {
        let ranked = rank(matrix, n, q);
        let (r, p) = precision_recall(q, &ranked, labels);
        recall.iter_mut().zip(r).for_each(|(a, b)| *a += b);
        precision.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        map += average_precision(q, &ranked, labels);
    }
    let nf = n.max(1) as f64;
    recall.iter_mut().for_each(|v| *v /= nf);
    precision.iter_mut().for_each(|v| *v /= nf);
    RetrievalResult {
        distance: name.to_string(),
        recall,
        precision,
        mean_average_precision: map / nf,
        wall_time_ms,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// No perturbation.
    Plain,
    Shift,
    Weight,
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" | "none" => Ok(Experiment::Plain),
            "shift" => Ok(Experiment::Shift),
            "weight" => Ok(Experiment::Weight),
            other => Err(Error::InvalidParameter(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub class_a: MixtureParams,
    pub class_b: MixtureParams,
    pub half_width: f64,
    pub per_class: usize,
    pub n_samples: usize,
    pub bins: usize,
    pub seed: u64,
    pub distances: Vec<BenchDistance>,
}

impl ExperimentConfig {
    /// Desk-scale configuration: 100 histograms per class, 1000 samples,
    /// 100 bins, perturbations of half-width 0.1.
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Self {
            experiment,
            class_a: MixtureParams::class_a(),
            class_b: MixtureParams::class_b(),
            half_width: 0.1,
            per_class: 100,
            n_samples: 1000,
            bins: 100,
            seed,
            distances: BenchDistance::standard(),
        }
    }

    pub fn perturbation(&self) -> PerturbationModel {
        match self.experiment {
            Experiment::Plain => PerturbationModel::None,
            Experiment::Shift => PerturbationModel::Shift { half_width: self.half_width },
            Experiment::Weight => PerturbationModel::Weight { half_width: self.half_width },
        }
    }
}

/// Builds the database and scores every configured distance on it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RetrievalResult>> {
    let db = generate_database(
        &config.class_a,
        &config.class_b,
        config.perturbation(),
        config.per_class,
        config.n_samples,
        config.bins,
        config.seed,
    )?;
    run_on_database(&db, &config.distances)
}

pub fn run_on_database(db: &[LabeledHistogram], distances: &[BenchDistance]) -> Result<Vec<RetrievalResult>> {
    let labels: Vec<usize> = db.iter().map(|h| h.label).collect();
    distances
        .iter()
        .map(|&d| {
            let start = Instant::now();
            let matrix = distance_matrix(db, d)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(evaluate_matrix(&d.to_string(), &matrix, &labels, ms))
        })
        .collect()
}

/// `r,recall,precision` rows.
pub fn write_pr_csv(result: &RetrievalResult, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "r,recall,precision")?;
    for (k, (r, p)) in result.recall.iter().zip(&result.precision).enumerate() {
        writeln!(out, "{},{r},{p}", k + 1)?;
    }
    out.flush()?;
    Ok(())
}

/// `distance,mAP,wall_time_ms` rows.
pub fn write_summary_csv(results: &[RetrievalResult], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "distance,mAP,wall_time_ms")?;
    for r in results {
        writeln!(out, "{},{},{:.3}", r.distance, r.mean_average_precision, r.wall_time_ms)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `pr_<distance>.csv` for every result and `summary.csv` into `dir`.
pub fn write_results(results: &[RetrievalResult], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for r in results {
        write_pr_csv(r, &dir.join(format!("pr_{}.csv", r.distance)))?;
    }
    write_summary_csv(results, &dir.join("summary.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_gaussian() {
        // 0.5 itself is a bin edge under floor binning, so sit mid-bin
        let p = MixtureParams::new(1.0, 0.55, 0.7, 1e-6, 1e-6).unwrap();
        let h = sample_histogram(&p, 100, 10, 1).unwrap();
        assert_eq!(h.weights()[5], 1.0);
    }

    #[test]
    fn deterministic_sampling() {
        let a = sample_histogram(&MixtureParams::class_a(), 1000, 100, 42).unwrap();
        let b = sample_histogram(&MixtureParams::class_a(), 1000, 100, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_weight_concentration() {
        let n = 1000;
        let h = sample_histogram(&MixtureParams::class_a(), n, 100, 3).unwrap();
        let left: f64 = h.weights()[..45].iter().sum();
        assert!((left - 0.6).abs() <= 3.0 / (n as f64).sqrt(), "{left}");
    }

    #[test]
    fn database_shape() {
        let db = generate_database(
            &MixtureParams::class_a(),
            &MixtureParams::class_b(),
            PerturbationModel::Shift { half_width: 0.1 },
            1,
            50,
            20,
            0,
        )
        .unwrap();
        assert_eq!(db.len(), 2);
        assert_eq!((db[0].label, db[1].label), (0, 1));
    }

    #[test]
    fn hand_built_ranking() {
        // query 0 of class 0; items 1 and 3 relevant at ranks 1 and 3
        let labels = [0, 0, 1, 0, 1];
        let (recall, precision) = precision_recall(0, &[1, 2, 3, 4], &labels);
        assert_eq!(precision[1], 0.5);
        assert_eq!(recall[1], 0.5);
        assert_eq!(recall[3], 1.0);
    }

    #[test]
    fn perfect_ranking() {
        let labels = [0, 0, 0, 1, 1, 1];
        let (recall, precision) = precision_recall(0, &[1, 2, 3, 4, 5], &labels);
        assert_eq!(recall[1], 1.0);
        assert!(precision[..2].iter().all(|&p| p == 1.0));
        assert_eq!(average_precision(0, &[1, 2, 3, 4, 5], &labels), 1.0);
    }

    #[test]
    fn parse_names() {
        for d in BenchDistance::standard() {
            assert_eq!(d.to_string().parse::<BenchDistance>().unwrap(), d);
        }
        assert!(matches!("mk0.5".parse::<BenchDistance>(), Err(Error::UnknownDistance(_))));
        assert!(matches!("cosine".parse::<BenchDistance>(), Err(Error::UnknownDistance(_))));
    }

    #[test]
    fn disjoint_classes_are_separated() {
        let a = MixtureParams::new(1.0, 0.2, 0.2, 0.02, 0.02).unwrap();
        let b = MixtureParams::new(1.0, 0.7, 0.7, 0.02, 0.02).unwrap();
        let db = generate_database(&a, &b, PerturbationModel::None, 5, 200, 50, 9).unwrap();
        let all = [BenchDistance::L1, BenchDistance::Mk(2.0), BenchDistance::Thresh(2.0)];
        for r in run_on_database(&db, &all).unwrap() {
            assert_eq!(r.mean_average_precision, 1.0, "{}", r.distance);
            assert!(r.precision[..4].iter().all(|&p| p == 1.0));
        }
    }
}
