//! Exact transportation and assignment solvers for arbitrary ground costs.
//!
//! [`solve_transport`] runs successive shortest paths with node potentials on
//! the dense bipartite network. Each phase computes reduced distances with a
//! dense Dijkstra, then saturates every admissible (zero reduced cost) path
//! with a blocking flow, so ties in the cost (thresholded and zero-one costs
//! have many) are handled in bulk.

use itertools::Itertools;

use crate::cost::{bin_distance, CostKind, GroundCost};
use crate::error::{Error, Result};
use crate::histogram::{normalized_atoms, ordered_pair, Histogram, Measure};
use crate::line::shared_scale;
use crate::simplex::transport_simplex;

/// Default bound on `N · M` for a single solve.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;

/// Total masses may differ by this much and still be treated as equal.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Flows below this are dropped from reported plans.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// Masses at or below this are treated as exhausted inside the solver.
const EPS: f64 = 1e-14;

/// A coupling `α_{i,j}` with its prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    entries: Vec<(usize, usize, f64)>,
    source_marginals: Vec<f64>,
    target_marginals: Vec<f64>,
}

impl TransportPlan {
    /// `entries` are `(i, j, flow)`; they are sorted and coalesced.
    pub fn new(
        mut entries: Vec<(usize, usize, f64)>,
        source_marginals: Vec<f64>,
        target_marginals: Vec<f64>,
    ) -> Result<Self> {
        let (n, m) = (source_marginals.len(), target_marginals.len());
        for &(i, j, a) in &entries {
            if i >= n || j >= m {
                return Err(Error::BinOutOfRange { index: i.max(j), bins: n.max(m) });
            }
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidWeight { index: i * m + j, value: a });
            }
        }
        entries.sort_by_key(|e| (e.0, e.1));
        let entries = entries
            .into_iter()
            .coalesce(|a, b| if (a.0, a.1) == (b.0, b.1) { Ok((a.0, a.1, a.2 + b.2)) } else { Err((a, b)) })
            .collect();
        Ok(Self { entries, source_marginals, target_marginals })
    }

    /// Nonzero flows as `(i, j, α_{i,j})`, sorted by `(i, j)`.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn source_marginals(&self) -> &[f64] {
        &self.source_marginals
    }

    pub fn target_marginals(&self) -> &[f64] {
        &self.target_marginals
    }

    pub fn flow(&self, i: usize, j: usize) -> f64 {
        match self.entries.binary_search_by_key(&(i, j), |e| (e.0, e.1)) {
            Ok(k) => self.entries[k].2,
            Err(_) => 0.0,
        }
    }

    /// `Σ α_{i,j} c(i, j)`.
    pub fn cost_with(&self, c: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|&(i, j, a)| a * c(i, j)).sum()
    }

    /// Largest deviation of a row or column sum from its marginal.
    pub fn marginal_error(&self) -> f64 {
        let mut rows = vec![0.0; self.source_marginals.len()];
        let mut cols = vec![0.0; self.target_marginals.len()];
        for &(i, j, a) in &self.entries {
            rows[i] += a;
            cols[j] += a;
        }
        let r = rows.iter().zip(&self.source_marginals).map(|(a, b)| (a - b).abs());
        let c = cols.iter().zip(&self.target_marginals).map(|(a, b)| (a - b).abs());
        r.chain(c).fold(0.0, f64::max)
    }
}

/// Optimal cost, plan, and dual potentials `u`, `v` with
/// `u_i + v_j <= c(i, j)` for every pair.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub cost: f64,
    pub plan: TransportPlan,
    pub source_duals: Vec<f64>,
    pub target_duals: Vec<f64>,
}

impl TransportSolution {
    /// `Σ f_i u_i + Σ g_j v_j`; equals `cost` at the optimum.
    pub fn dual_objective(&self) -> f64 {
        let p = &self.plan;
        let a: f64 = p.source_marginals().iter().zip(&self.source_duals).map(|(f, u)| f * u).sum();
        let b: f64 = p.target_marginals().iter().zip(&self.target_duals).map(|(g, v)| g * v).sum();
        a + b
    }
}

struct Network<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    rem_s: Vec<f64>,
    rem_d: Vec<f64>,
    pu: Vec<f64>,
    pv: Vec<f64>,
    tol: f64,
    level: Vec<u32>,
    it: Vec<usize>,
}

impl<'a> Network<'a> {
    fn rc(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.m + j] + self.pu[i] - self.pv[j]
    }

    /// Dijkstra on reduced costs from all active sources to the nearest
    /// active sink; updates potentials. Returns false when no sink is
    /// reachable.
    fn dijkstra(&mut self) -> bool {
        let (n, m) = (self.n, self.m);
        let nn = n + m;
        let mut dist = vec![f64::INFINITY; nn];
        let mut done = vec![false; nn];
        for i in 0..n {
            if self.rem_s[i] > EPS {
                dist[i] = 0.0;
            }
        }
        let mut reach = f64::INFINITY;
        loop {
            let mut best = f64::INFINITY;
            let mut u = usize::MAX;
            for (v, (&d, &f)) in dist.iter().zip(&done).enumerate() {
                if !f && d < best {
                    best = d;
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n {
                let j = u - n;
                if self.rem_d[j] > EPS {
                    reach = best;
                    break;
                }
                for i in 0..n {
                    if done[i] || self.flow[i * m + j] <= EPS {
                        continue;
                    }
                    let nd = best + (-self.rc(i, j)).max(0.0);
                    if nd < dist[i] {
                        dist[i] = nd;
                    }
                }
            } else {
                let i = u;
                let row = &self.cost[i * m..(i + 1) * m];
                let pi = self.pu[i];
                for j in 0..m {
                    if done[n + j] {
                        continue;
                    }
                    let nd = best + (row[j] + pi - self.pv[j]).max(0.0);
                    if nd < dist[n + j] {
                        dist[n + j] = nd;
                    }
                }
            }
        }
        if !reach.is_finite() {
            return false;
        }
        for i in 0..n {
            self.pu[i] += dist[i].min(reach);
        }
        for j in 0..m {
            self.pv[j] += dist[n + j].min(reach);
        }
        true
    }

    /// Levels of the admissible residual graph; true if an active sink is
    /// reachable.
    fn bfs(&mut self) -> bool {
        let (n, m) = (self.n, self.m);
        self.level.iter_mut().for_each(|l| *l = u32::MAX);
        let mut queue = std::collections::VecDeque::new();
        for i in 0..n {
            if self.rem_s[i] > EPS {
                self.level[i] = 0;
                queue.push_back(i);
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            let next = self.level[u] + 1;
            if u < n {
                for j in 0..m {
                    if self.level[n + j] == u32::MAX && self.rc(u, j) <= self.tol {
                        self.level[n + j] = next;
                        queue.push_back(n + j);
                    }
                }
            } else {
                let j = u - n;
                if self.rem_d[j] > EPS {
                    found = true;
                    continue;
                }
                for i in 0..n {
                    if self.level[i] == u32::MAX && self.flow[i * m + j] > EPS {
                        self.level[i] = next;
                        queue.push_back(i);
                    }
                }
            }
        }
        found
    }

    fn dfs(&mut self, v: usize, limit: f64) -> f64 {
        let (n, m) = (self.n, self.m);
        if v >= n && self.rem_d[v - n] > EPS {
            let t = limit.min(self.rem_d[v - n]);
            self.rem_d[v - n] -= t;
            return t;
        }
        let mut pushed = 0.0;
        if v < n {
            let i = v;
            while self.it[v] < m {
                let j = self.it[v];
                if self.level[n + j] == self.level[v] + 1 && self.rc(i, j) <= self.tol {
                    let got = self.dfs(n + j, limit - pushed);
                    if got > 0.0 {
                        self.flow[i * m + j] += got;
                        pushed += got;
                        if limit - pushed <= EPS {
                            return pushed;
                        }
                    }
                }
                self.it[v] += 1;
            }
        } else {
            let j = v - n;
            while self.it[v] < n {
                let i = self.it[v];
                let cap = self.flow[i * m + j];
                if self.level[i] == self.level[v] + 1 && cap > EPS {
                    let got = self.dfs(i, (limit - pushed).min(cap));
                    if got > 0.0 {
                        self.flow[i * m + j] -= got;
                        pushed += got;
                        if limit - pushed <= EPS {
                            return pushed;
                        }
                    }
                }
                self.it[v] += 1;
            }
        }
        pushed
    }

    fn run(&mut self) {
        while self.rem_s.iter().any(|&s| s > EPS) {
            if !self.dijkstra() {
                break;
            }
            while self.bfs() {
                self.it.iter_mut().for_each(|x| *x = 0);
                let mut any = false;
                for i in 0..self.n {
                    if self.level[i] == 0 && self.rem_s[i] > EPS {
                        let got = self.dfs(i, self.rem_s[i]);
                        if got > 0.0 {
                            self.rem_s[i] -= got;
                            any = true;
                        }
                    }
                }
                if !any {
                    break;
                }
            }
        }
    }
}

/// Solves the transportation problem for a dense row-major `n × m` cost
/// matrix. Supplies and demands must have equal totals within
/// [`FEASIBILITY_TOLERANCE`].
pub fn solve_cost_matrix(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    solve_cost_matrix_capped(supply, demand, cost, DEFAULT_SIZE_CAP)
}

pub fn solve_cost_matrix_capped(
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
    cap: usize,
) -> Result<TransportSolution> {
    let (n, m) = (supply.len(), demand.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptyDistribution);
    }
    if n * m > cap {
        return Err(Error::SizeCapExceeded { entries: n * m, cap });
    }
    if cost.len() != n * m {
        return Err(Error::LengthMismatch(cost.len(), n * m));
    }
    for (index, &value) in supply.iter().chain(demand).enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidWeight { index, value });
        }
    }
    let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (ts - td).abs() > FEASIBILITY_TOLERANCE {
        return Err(Error::Infeasible(ts, td));
    }
    let mut pv = vec![f64::INFINITY; m];
    let mut cmax: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            let c = cost[i * m + j];
            if !c.is_finite() {
                return Err(Error::InvalidCost(format!("non-finite cost at ({i}, {j})")));
            }
            pv[j] = pv[j].min(c);
            cmax = cmax.max(c.abs());
        }
    }
    let mut net = Network {
        n,
        m,
        cost,
        flow: vec![0.0; n * m],
        rem_s: supply.to_vec(),
        rem_d: demand.to_vec(),
        pu: vec![0.0; n],
        pv,
        tol: 1e-12 * cmax.max(1.0),
        level: vec![0; n + m],
        it: vec![0; n + m],
    };
    net.run();
    let Network { flow, pu, pv, .. } = net;
    Ok(assemble(n, m, flow, supply, demand, cost, pu, pv))
}

fn assemble(
    n: usize,
    m: usize,
    flow: Vec<f64>,
    supply: &[f64],
    demand: &[f64],
    cost: &[f64],
    pu: Vec<f64>,
    pv: Vec<f64>,
) -> TransportSolution {
    let mut entries = Vec::new();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let a = flow[i * m + j];
            if a > PRUNE_THRESHOLD {
                entries.push((i, j, a));
                total += a * cost[i * m + j];
            }
        }
    }
    let plan = TransportPlan { entries, source_marginals: supply.to_vec(), target_marginals: demand.to_vec() };
    TransportSolution {
        cost: total,
        plan,
        source_duals: pu.into_iter().map(|p| -p).collect(),
        target_duals: pv,
    }
}

/// Moves flow so that every bin keeps its shared mass `min(f_i, g_i)` in place.
///
/// A unit routed `k → i → j` through a bin with both incoming and outgoing
/// transport is rerouted `k → j` with `i` kept in place; for a cost obeying
/// the triangle inequality with `c(i, i) = 0` this never increases the cost.
fn retain_shared_mass(flow: &mut [f64], n: usize, f: &[f64], g: &[f64]) {
    for i in 0..n {
        let target = f[i].min(g[i]);
        while flow[i * n + i] < target - PRUNE_THRESHOLD {
            let k = (0..n).find(|&k| k != i && flow[k * n + i] > PRUNE_THRESHOLD);
            let j = (0..n).find(|&j| j != i && flow[i * n + j] > PRUNE_THRESHOLD);
            let (Some(k), Some(j)) = (k, j) else { break };
            let d = flow[k * n + i].min(flow[i * n + j]).min(target - flow[i * n + i]);
            flow[k * n + i] -= d;
            flow[i * n + j] -= d;
            flow[k * n + j] += d;
            flow[i * n + i] += d;
        }
    }
}

/// Cost matrix between the atoms of two measures, in their natural units.
fn cost_matrix<M: Measure + ?Sized>(f: &M, g: &M, cost: &GroundCost) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    shared_scale(f, g)?;
    let fa = normalized_atoms(f)?;
    let ga = normalized_atoms(g)?;
    let (n, m) = (fa.len(), ga.len());
    let mut c = Vec::with_capacity(n * m);
    match (f.as_histogram(), g.as_histogram()) {
        (Some(h), Some(_)) => {
            let bins = h.bins();
            for i in 0..n {
                for j in 0..m {
                    c.push(cost.evaluate_bins(i, j, bins));
                }
            }
        }
        _ => {
            for &(x, _) in &fa {
                for &(y, _) in &ga {
                    c.push(cost.evaluate(x, y));
                }
            }
        }
    }
    Ok((fa.into_iter().map(|a| a.1).collect(), ga.into_iter().map(|a| a.1).collect(), c))
}

/// Exact `MK_c(f, g)` and an optimal plan for any cost variant.
///
/// Histogram costs use bin units and point masses perimeter units. For
/// histograms under a metric cost the returned plan keeps all shared mass on
/// the diagonal.
pub fn solve_transport<M: Measure + ?Sized>(f: &M, g: &M, cost: &GroundCost) -> Result<TransportSolution> {
    solve_transport_capped(f, g, cost, DEFAULT_SIZE_CAP)
}

pub fn solve_transport_capped<M: Measure + ?Sized>(
    f: &M,
    g: &M,
    cost: &GroundCost,
    cap: usize,
) -> Result<TransportSolution> {
    let entries = f.atoms().len() * g.atoms().len();
    if entries > cap {
        return Err(Error::SizeCapExceeded { entries, cap });
    }
    let (supply, demand, c) = cost_matrix(f, g, cost)?;
    let sol = solve_cost_matrix_capped(&supply, &demand, &c, cap)?;
    if f.as_histogram().is_none() || !cost.is_metric() {
        return Ok(sol);
    }
    let n = supply.len();
    let mut flow = vec![0.0; n * n];
    for &(i, j, a) in sol.plan.entries() {
        flow[i * n + j] = a;
    }
    retain_shared_mass(&mut flow, n, &supply, &demand);
    let TransportSolution { source_duals, target_duals, .. } = sol;
    let pu = source_duals.into_iter().map(|u| -u).collect();
    Ok(assemble(n, n, flow, &supply, &demand, &c, pu, target_duals))
}

/// `MK_c` for a concave cost between histograms, in bin units.
///
/// The zero-one cost has the closed form `½ Σ |f[i] − g[i]|`. Other concave
/// costs leave shared mass in place, so only `(f − g)⁺` is transported
/// onto `(g − f)⁺`.
pub fn mk_concave(f: &Histogram, g: &Histogram, cost: &GroundCost) -> Result<f64> {
    if cost.is_convex_increasing() {
        return Err(Error::ConvexCost);
    }
    if f.bins() != g.bins() {
        return Err(Error::BinMismatch(f.bins(), g.bins()));
    }
    let (f, g) = ordered_pair(f, g);
    let f = f.normalized_or_warn()?;
    let g = g.normalized_or_warn()?;
    if cost.kind() == CostKind::ZeroOne {
        return Ok(half_l1(f.weights(), g.weights()));
    }
    let n = f.bins();
    let mut sources = Vec::new();
    let mut sinks = Vec::new();
    for (i, (a, b)) in f.weights().iter().zip(g.weights()).enumerate() {
        if a > b {
            sources.push((i, a - b));
        } else if b > a {
            sinks.push((i, b - a));
        }
    }
    if sources.is_empty() || sinks.is_empty() {
        return Ok(0.0);
    }
    let topology = cost.topology();
    let mut c = Vec::with_capacity(sources.len() * sinks.len());
    for &(i, _) in &sources {
        for &(j, _) in &sinks {
            c.push(cost.h(bin_distance(i, j, n, topology) as f64));
        }
    }
    let supply: Vec<f64> = sources.iter().map(|s| s.1).collect();
    let demand: Vec<f64> = sinks.iter().map(|s| s.1).collect();
    let m = demand.len();
    match transport_simplex(&supply, &demand, &c) {
        Some(flows) => Ok(flows.iter().map(|&(i, j, a)| a * c[i * m + j]).sum()),
        None => {
            log::debug!("simplex pivot limit reached, using shortest paths");
            Ok(solve_cost_matrix(&supply, &demand, &c)?.cost)
        }
    }
}

/// [`mk_concave`] without the shared-mass reduction.
pub fn mk_concave_full(f: &Histogram, g: &Histogram, cost: &GroundCost) -> Result<f64> {
    if cost.is_convex_increasing() {
        return Err(Error::ConvexCost);
    }
    Ok(solve_transport(f, g, cost)?.cost)
}

/// `½ Σ |f[i] − g[i]|`.
pub fn half_l1(f: &[f64], g: &[f64]) -> f64 {
    0.5 * f.iter().zip(g).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn assignment_costs(xs: &[f64], ys: &[f64], cost: &GroundCost) -> Result<Vec<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    for &p in xs.iter().chain(ys) {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::PositionOutOfRange(p));
        }
    }
    Ok(xs.iter().flat_map(|&x| ys.iter().map(move |&y| cost.evaluate(x, y))).collect())
}

fn permutation_cost(c: &[f64], p: usize, sigma: &[usize]) -> f64 {
    sigma.iter().enumerate().map(|(k, &s)| c[k * p + s]).sum::<f64>() / p as f64
}

/// Optimal `σ` minimizing `(1/P) Σ h(d(x_k, y_σ(k)))`, by the Hungarian method.
pub fn solve_assignment(xs: &[f64], ys: &[f64], cost: &GroundCost) -> Result<(f64, Vec<usize>)> {
    let c = assignment_costs(xs, ys, cost)?;
    let p = xs.len();
    let sigma = hungarian(&c, p);
    Ok((permutation_cost(&c, p, &sigma), sigma))
}

/// Largest `P` accepted by the exhaustive assignment scan.
pub const EXHAUSTIVE_LIMIT: usize = 10;

/// [`solve_assignment`] by scanning all `P!` permutations.
pub fn solve_assignment_exhaustive(xs: &[f64], ys: &[f64], cost: &GroundCost) -> Result<(f64, Vec<usize>)> {
    let c = assignment_costs(xs, ys, cost)?;
    let p = xs.len();
    if p > EXHAUSTIVE_LIMIT {
        return Err(Error::InvalidParameter(format!("exhaustive scan limited to {EXHAUSTIVE_LIMIT} points")));
    }
    let mut best = (f64::INFINITY, Vec::new());
    for sigma in (0..p).permutations(p) {
        let v = permutation_cost(&c, p, &sigma);
        if v < best.0 {
            best = (v, sigma);
        }
    }
    Ok(best)
}

/// Every permutation whose cost is within `tol` of the optimum.
pub fn optimal_permutations(xs: &[f64], ys: &[f64], cost: &GroundCost, tol: f64) -> Result<(f64, Vec<Vec<usize>>)> {
    let c = assignment_costs(xs, ys, cost)?;
    let p = xs.len();
    if p > EXHAUSTIVE_LIMIT {
        return Err(Error::InvalidParameter(format!("exhaustive scan limited to {EXHAUSTIVE_LIMIT} points")));
    }
    let scored: Vec<(f64, Vec<usize>)> =
        (0..p).permutations(p).map(|s| (permutation_cost(&c, p, &s), s)).collect();
    let best = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    Ok((best, scored.into_iter().filter(|s| s.0 <= best + tol).map(|s| s.1).collect()))
}

/// Hungarian method with potentials on a dense `p × p` matrix, `O(p³)`.
fn hungarian(c: &[f64], p: usize) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; p + 1];
    let mut v = vec![0.0; p + 1];
    let mut owner = vec![0usize; p + 1];
    let mut way = vec![0usize; p + 1];
    for i in 1..=p {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; p + 1];
        let mut used = vec![false; p + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=p {
                if used[j] {
                    continue;
                }
                let cur = c[(i0 - 1) * p + j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=p {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0; p];
    for j in 1..=p {
        sigma[owner[j] - 1] = j - 1;
    }
    sigma
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcDirection {
    /// Increasing coordinate (counter-clockwise).
    Positive,
    Negative,
}

/// The open geodesic arc from `start` to `end`. Antipodal pairs take the
/// positive direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicArc {
    pub start: f64,
    pub end: f64,
    pub direction: ArcDirection,
}

impl GeodesicArc {
    pub fn new(start: f64, end: f64) -> Self {
        let forward = (end - start).rem_euclid(1.0);
        let direction = if forward <= 0.5 { ArcDirection::Positive } else { ArcDirection::Negative };
        Self { start, end, direction }
    }

    pub fn length(&self) -> f64 {
        match self.direction {
            ArcDirection::Positive => (self.end - self.start).rem_euclid(1.0),
            ArcDirection::Negative => (self.start - self.end).rem_euclid(1.0),
        }
    }

    /// Whether `t` lies strictly inside the arc.
    pub fn contains(&self, t: f64) -> bool {
        let offset = match self.direction {
            ArcDirection::Positive => (t - self.start).rem_euclid(1.0),
            ArcDirection::Negative => (self.start - t).rem_euclid(1.0),
        };
        offset > 0.0 && offset < self.length()
    }
}

fn assignment_arcs(xs: &[f64], ys: &[f64], sigma: &[usize]) -> Result<Vec<GeodesicArc>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if sigma.len() != xs.len() || !sigma.iter().all_unique() || sigma.iter().any(|&s| s >= ys.len()) {
        return Err(Error::InvalidPermutation);
    }
    let mut all: Vec<f64> = xs.iter().chain(ys).copied().collect();
    all.sort_by(f64::total_cmp);
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::CoincidentPoints);
    }
    Ok(xs.iter().zip(sigma).map(|(&x, &s)| GeodesicArc::new(x, ys[s])).collect())
}

/// A circle position inside none of the open arcs `γ(x_l, y_σ(l))`, or
/// `None` when the arcs cover the whole circle.
///
/// The midpoint of the widest uncovered gap between endpoints is preferred;
/// an uncovered endpoint is returned otherwise.
pub fn find_uncrossed_point(xs: &[f64], ys: &[f64], sigma: &[usize]) -> Result<Option<f64>> {
    let arcs = assignment_arcs(xs, ys, sigma)?;
    let free = |t: f64| arcs.iter().all(|a| !a.contains(t));
    let mut ends: Vec<f64> = xs.iter().chain(ys).copied().collect();
    ends.sort_by(f64::total_cmp);
    let k = ends.len();
    let mut best: Option<(f64, f64)> = None;
    for idx in 0..k {
        let a = ends[idx];
        let width = if idx + 1 < k { ends[idx + 1] - a } else { ends[0] + 1.0 - a };
        let mid = (a + 0.5 * width).rem_euclid(1.0);
        if free(mid) && best.map_or(true, |b| width > b.0) {
            best = Some((width, mid));
        }
    }
    if let Some((_, mid)) = best {
        return Ok(Some(mid));
    }
    Ok(ends.into_iter().find(|&t| free(t)))
}

/// An index `k` such that `x_k` lies on no other arc of the assignment.
pub fn uncrossed_source_index(xs: &[f64], ys: &[f64], sigma: &[usize]) -> Result<Option<usize>> {
    let arcs = assignment_arcs(xs, ys, sigma)?;
    Ok((0..xs.len()).find(|&k| arcs.iter().enumerate().all(|(l, a)| l == k || !a.contains(xs[k]))))
}
