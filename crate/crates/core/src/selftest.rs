//! Randomized agreement checks between the fast solvers and the exact ones.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circle::{cemd, cemd_bruteforce, mk_circle};
use crate::cost::GroundCost;
use crate::error::Result;
use crate::histogram::{Histogram, PointMassDistribution, Topology};
use crate::line::mk_line;
use crate::oracle::{half_l1, mk_concave, mk_concave_full, solve_assignment, solve_transport};

/// Outcome of one family of comparisons.
#[derive(Debug, Clone)]
pub struct CheckSummary {
    pub name: &'static str,
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl CheckSummary {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

impl fmt::Display for CheckSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} trials, max deviation {:.3e} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.trials,
            self.max_deviation,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub checks: Vec<CheckSummary>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckSummary::passed)
    }

    pub fn max_deviation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_deviation).fold(0.0, f64::max)
    }
}

/// Random normalized histogram, with some empty bins.
pub fn random_histogram<R: Rng + ?Sized>(rng: &mut R, bins: usize, topology: Topology) -> Histogram {
    loop {
        let w: Vec<f64> =
            (0..bins).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            return Histogram::new(w.iter().map(|x| x / total).collect(), topology).expect("valid weights");
        }
    }
}

/// `p` distinct uniform positions in `[0, 1)`.
pub fn random_positions<R: Rng + ?Sized>(rng: &mut R, p: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = Vec::with_capacity(p);
    while xs.len() < p {
        let x = rng.random::<f64>();
        if xs.iter().all(|&y| (x - y).abs() > 1e-9) {
            xs.push(x);
        }
    }
    xs
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    trials: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, trials: 0, worst: 0.0 }
    }

    fn record(&mut self, deviation: f64) {
        self.trials += 1;
        // a NaN deviation must count as a failure
        self.worst = if deviation.is_nan() { f64::INFINITY } else { self.worst.max(deviation) };
    }

    fn finish(self) -> CheckSummary {
        CheckSummary { name: self.name, trials: self.trials, max_deviation: self.worst, tolerance: self.tolerance }
    }
}

/// Runs `trials` random cases of every check.
pub fn run_selftest(trials: usize, seed: u64) -> Result<SelftestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let circ = Topology::Circular;
    let mut median = Tally::new("cemd median vs all cuts", 1e-10);
    let mut hist_circle = Tally::new("circle quantile vs flow (histograms)", 1e-6);
    let mut point_circle = Tally::new("circle quantile vs assignment (points)", 1e-6);
    let mut hist_line = Tally::new("line quantile vs flow", 1e-9);
    let mut concave = Tally::new("concave reduced vs full flow", 1e-9);
    let mut zero_one = Tally::new("zero-one closed form vs flow", 1e-9);
    let mut duality = Tally::new("flow duality gap", 1e-9);

    for _ in 0..trials {
        let n = rng.random_range(2..=64);
        let f = random_histogram(&mut rng, n, circ);
        let g = random_histogram(&mut rng, n, circ);
        median.record((cemd(&f, &g)? - cemd_bruteforce(&f, &g)?).abs());

        let n = rng.random_range(2..=12);
        let f = random_histogram(&mut rng, n, circ);
        let g = random_histogram(&mut rng, n, circ);
        let fl = f.clone().with_topology(Topology::Linear);
        let gl = g.clone().with_topology(Topology::Linear);
        for lambda in [1.0, 2.0, 3.0] {
            let cost = GroundCost::power(lambda, circ)?;
            let exact = solve_transport(&f, &g, &cost)?;
            hist_circle.record(relative(mk_circle(&f, &g, &cost, 1e-9)?, exact.cost));
            duality.record(relative(exact.dual_objective(), exact.cost));
            let line_cost = GroundCost::power(lambda, Topology::Linear)?;
            hist_line.record(relative(mk_line(&fl, &gl, &line_cost)?, solve_transport(&fl, &gl, &line_cost)?.cost));
        }

        let p = rng.random_range(1..=7);
        let xs = PointMassDistribution::uniform(random_positions(&mut rng, p))?;
        let ys = PointMassDistribution::uniform(random_positions(&mut rng, p))?;
        for lambda in [1.0, 2.0, 3.0] {
            let cost = GroundCost::power(lambda, circ)?;
            let (exact, _) = solve_assignment(xs.positions(), ys.positions(), &cost)?;
            point_circle.record(relative(mk_circle(&xs, &ys, &cost, 1e-9)?, exact));
        }

        let n = rng.random_range(2..=32);
        let f = random_histogram(&mut rng, n, circ);
        let g = random_histogram(&mut rng, n, circ);
        for cost in [GroundCost::exponential(1.0, circ)?, GroundCost::thresholded(2.0, circ)?] {
            concave.record(relative(mk_concave(&f, &g, &cost)?, mk_concave_full(&f, &g, &cost)?));
        }
        let zo = GroundCost::zero_one(circ);
        zero_one.record((half_l1(f.weights(), g.weights()) - solve_transport(&f, &g, &zo)?.cost).abs());
    }

    let checks = [median, hist_circle, point_circle, hist_line, concave, zero_one, duality]
        .into_iter()
        .map(Tally::finish)
        .collect();
    Ok(SelftestReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_passes() {
        let report = run_selftest(20, 7).unwrap();
        for c in &report.checks {
            assert!(c.passed(), "{c}");
            assert!(c.trials > 0);
        }
        assert!(report.passed());
    }

    #[test]
    fn deterministic() {
        let a = run_selftest(5, 3).unwrap();
        let b = run_selftest(5, 3).unwrap();
        assert_eq!(a.max_deviation(), b.max_deviation());
    }
}
