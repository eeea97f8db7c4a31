//! Transportation simplex for small dense problems.
//!
//! Least-cost start, Dantzig pricing, basis kept as a spanning tree of the
//! bipartite graph. Used on the hot path of concave histogram distances; the
//! shortest-path solver in `oracle` stays the reference.

const EPS: f64 = 1e-14;

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

/// Optimal flows as `(i, j, amount)` over basic cells, or `None` when the
/// pivot limit is reached. `cost` is row-major `supply.len() × demand.len()`.
pub(crate) fn transport_simplex(supply: &[f64], demand: &[f64], cost: &[f64]) -> Option<Vec<(usize, usize, f64)>> {
    let (n, m) = (supply.len(), demand.len());
    if n == 0 || m == 0 {
        return Some(Vec::new());
    }
    let nodes = n + m;
    let cmax = cost.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    let tol = 1e-11 * cmax.max(1.0);

    let mut order: Vec<usize> = (0..n * m).collect();
    order.sort_unstable_by(|&a, &b| cost[a].total_cmp(&cost[b]));
    let mut rs = supply.to_vec();
    let mut rd = demand.to_vec();
    let mut sets = DisjointSets((0..nodes).collect());
    let mut cells: Vec<(usize, usize)> = Vec::with_capacity(nodes - 1);
    let mut flow: Vec<f64> = Vec::with_capacity(nodes - 1);
    for &k in &order {
        let (i, j) = (k / m, k % m);
        if rs[i] > EPS && rd[j] > EPS {
            if !sets.union(i, n + j) {
                return None;
            }
            let x = rs[i].min(rd[j]);
            rs[i] -= x;
            rd[j] -= x;
            cells.push((i, j));
            flow.push(x);
        }
    }
    'connect: for i in 0..n {
        for j in 0..m {
            if cells.len() == nodes - 1 {
                break 'connect;
            }
            if sets.union(i, n + j) {
                cells.push((i, j));
                flow.push(0.0);
            }
        }
    }

    let mut basic = vec![false; n * m];
    for &(i, j) in &cells {
        basic[i * m + j] = true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    for (k, &(i, j)) in cells.iter().enumerate() {
        adj[i].push(k);
        adj[n + j].push(k);
    }

    let mut pot = vec![0.0; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut parent_cell = vec![usize::MAX; nodes];
    let mut depth = vec![0usize; nodes];
    let mut queue = Vec::with_capacity(nodes);
    let limit = 50 * nodes * nodes + 1000;
    for _ in 0..limit {
        // potentials: u_i + v_j = c_ij on basic cells, with u_0 = 0
        parent.fill(usize::MAX);
        parent[0] = 0;
        pot[0] = 0.0;
        depth[0] = 0;
        queue.clear();
        queue.push(0);
        let mut head = 0;
        while head < queue.len() {
            let x = queue[head];
            head += 1;
            for &k in &adj[x] {
                let (i, j) = cells[k];
                let y = if x == i { n + j } else { i };
                if parent[y] != usize::MAX {
                    continue;
                }
                parent[y] = x;
                parent_cell[y] = k;
                depth[y] = depth[x] + 1;
                pot[y] = cost[i * m + j] - pot[x];
                queue.push(y);
            }
        }

        let mut best = -tol;
        let mut enter = usize::MAX;
        for i in 0..n {
            let row = &cost[i * m..(i + 1) * m];
            let u = pot[i];
            for (j, &c) in row.iter().enumerate() {
                let rc = c - u - pot[n + j];
                if rc < best && !basic[i * m + j] {
                    best = rc;
                    enter = i * m + j;
                }
            }
        }
        if enter == usize::MAX {
            return Some(cells.iter().zip(&flow).map(|(&(i, j), &x)| (i, j, x)).collect());
        }

        // tree path from the sink end of the entering cell back to its source end
        let (ei, ej) = (enter / m, enter % m);
        let (mut a, mut b) = (n + ej, ei);
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while depth[a] > depth[b] {
            from_a.push(parent_cell[a]);
            a = parent[a];
        }
        while depth[b] > depth[a] {
            from_b.push(parent_cell[b]);
            b = parent[b];
        }
        while a != b {
            from_a.push(parent_cell[a]);
            a = parent[a];
            from_b.push(parent_cell[b]);
            b = parent[b];
        }
        from_b.reverse();
        from_a.extend(from_b);
        let path = from_a;

        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for &k in path.iter().step_by(2) {
            if flow[k] < theta {
                theta = flow[k];
                leave = k;
            }
        }
        for (pos, &k) in path.iter().enumerate() {
            if pos % 2 == 0 {
                flow[k] -= theta;
            } else {
                flow[k] += theta;
            }
        }
        let (li, lj) = cells[leave];
        basic[li * m + lj] = false;
        adj[li].retain(|&k| k != leave);
        adj[n + lj].retain(|&k| k != leave);
        cells[leave] = (ei, ej);
        flow[leave] = theta;
        basic[enter] = true;
        adj[ei].push(leave);
        adj[n + ej].push(leave);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::solve_cost_matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_masses(rng: &mut ChaCha8Rng, k: usize, grid: bool) -> Vec<f64> {
        let raw: Vec<f64> =
            (0..k).map(|_| if grid { rng.random_range(0..5) as f64 } else { rng.random::<f64>() }).collect();
        let total: f64 = raw.iter().sum::<f64>().max(1.0);
        raw.iter().map(|x| x / total).collect()
    }

    #[test]
    fn agrees_with_shortest_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..300 {
            let (n, m) = (rng.random_range(1..12), rng.random_range(1..12));
            // integer grids give many degenerate pivots
            let grid = case % 2 == 0;
            let mut supply = random_masses(&mut rng, n, grid);
            let mut demand = random_masses(&mut rng, m, grid);
            let (s, d): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
            if s == 0.0 || d == 0.0 {
                continue;
            }
            supply.iter_mut().for_each(|x| *x /= s);
            demand.iter_mut().for_each(|x| *x /= d);
            let cost: Vec<f64> = (0..n * m).map(|_| rng.random_range(0..4) as f64 / 3.0).collect();
            let flows = transport_simplex(&supply, &demand, &cost).expect("converges");
            let value: f64 = flows.iter().map(|&(i, j, a)| a * cost[i * m + j]).sum();
            let mut rows = vec![0.0; n];
            let mut cols = vec![0.0; m];
            for &(i, j, a) in &flows {
                assert!(a >= 0.0);
                rows[i] += a;
                cols[j] += a;
            }
            for (x, y) in rows.iter().zip(&supply).chain(cols.iter().zip(&demand)) {
                assert!((x - y).abs() < 1e-12);
            }
            let reference = solve_cost_matrix(&supply, &demand, &cost).unwrap().cost;
            assert!((value - reference).abs() < 1e-12, "case {case}: {value} vs {reference}");
        }
    }

    #[test]
    fn single_cell() {
        assert_eq!(transport_simplex(&[1.0], &[1.0], &[0.5]).unwrap(), vec![(0, 0, 1.0)]);
    }
}
