//! Optimal transport on the circle of perimeter 1.
//!
//! For a convex increasing `h`, the optimal cost is
//! `inf_α φ(α)` with `φ(α) = ∫₀¹ h(|F⁻¹(t) − G⁻¹(t + α)|) dt`, where `G⁻¹(· + α)`
//! is the pseudo-inverse of `G − α` on the periodic extension. For `h(t) = t`
//! this collapses to the median formula [`cemd`].

use crate::cost::GroundCost;
use crate::error::{Error, Result};
use crate::histogram::{ordered_pair, shifted_cumulative, CumulativeFunction, Histogram, Measure, Topology};
use crate::line::{normalized_cumulative, quantile_cost, shared_scale, TransferMap};

/// Any optimal shift lies within one unit of mass of zero.
pub const ALPHA_BRACKET: (f64, f64) = (-1.0, 1.0);

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn check_convex(cost: &GroundCost) -> Result<()> {
    if cost.is_convex_increasing() {
        Ok(())
    } else {
        Err(Error::NonConvexCost)
    }
}

/// `φ(α)`, evaluated exactly by a merged quantile sweep.
pub fn phi<M: Measure + ?Sized>(f: &M, g: &M, cost: &GroundCost, alpha: f64) -> Result<f64> {
    check_convex(cost)?;
    let scale = shared_scale(f, g)?;
    let fc = normalized_cumulative(f)?;
    let gc = normalized_cumulative(g)?;
    Ok(quantile_cost(&fc, &gc, alpha, true, cost, scale))
}

/// Minimizes `φ` over the bracket `[-1, 1]`; returns `(α*, φ(α*))`.
///
/// `φ` is convex and affine between the shifts where a level of `F` meets a
/// level of `G − α`. A golden-section search narrows the bracket below
/// `epsilon`, after which the minimum is taken over the kinks left inside it.
pub fn minimize_phi<M: Measure + ?Sized>(
    f: &M,
    g: &M,
    cost: &GroundCost,
    epsilon: f64,
) -> Result<(f64, f64)> {
    check_convex(cost)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidPrecision(epsilon));
    }
    let scale = shared_scale(f, g)?;
    let fc = normalized_cumulative(f)?;
    let gc = normalized_cumulative(g)?;
    Ok(minimize_cumulatives(&fc, &gc, cost, scale, epsilon))
}

fn minimize_cumulatives(
    fc: &CumulativeFunction,
    gc: &CumulativeFunction,
    cost: &GroundCost,
    scale: f64,
    epsilon: f64,
) -> (f64, f64) {
    let phi = |a: f64| quantile_cost(fc, gc, a, true, cost, scale);
    let (mut a, mut b) = ALPHA_BRACKET;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc_val, mut fd_val) = (phi(c), phi(d));
    while b - a > epsilon {
        if fc_val <= fd_val {
            b = d;
            d = c;
            fd_val = fc_val;
            c = b - INV_PHI * (b - a);
            fc_val = phi(c);
        } else {
            a = c;
            c = d;
            fc_val = fd_val;
            d = a + INV_PHI * (b - a);
            fd_val = phi(d);
        }
    }

    let mut kinks = kinks_in(fc, gc, a, b);
    kinks.push(a);
    kinks.push(b);
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();

    // φ restricted to the sorted kinks is a convex sequence
    let (mut lo, mut hi) = (0usize, kinks.len() - 1);
    while hi - lo > 2 {
        let m1 = lo + (hi - lo) / 3;
        let m2 = hi - (hi - lo) / 3;
        if phi(kinks[m1]) <= phi(kinks[m2]) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    (lo..=hi)
        .map(|i| (kinks[i], phi(kinks[i])))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty")
}

/// Shifts `α ∈ [a, b]` of the form `v + k − u`, with `u` a level of `F`
/// (including 0), `v` a level of `G` and `k` an integer.
fn kinks_in(fc: &CumulativeFunction, gc: &CumulativeFunction, a: f64, b: f64) -> Vec<f64> {
    let gv = gc.values();
    let gtotal = gc.total();
    let mut out = Vec::new();
    for &u in std::iter::once(&0.0).chain(fc.values()) {
        let (lo, hi) = (a + u, b + u);
        let k0 = (lo / gtotal).floor() as i64 - 1;
        let k1 = (hi / gtotal).ceil() as i64;
        for k in k0..=k1 {
            let base = k as f64 * gtotal;
            let start = gv.partition_point(|&v| v + base < lo);
            for &v in &gv[start..] {
                if v + base > hi {
                    break;
                }
                out.push(v + base - u);
            }
        }
    }
    out
}

/// `MK_c(f, g)` on the circle for a convex increasing cost (raw cost, no
/// root). Histograms are measured in bin units, point masses in perimeter
/// units. For `λ = 1` the exact median formula is used.
pub fn mk_circle<M: Measure + ?Sized>(
    f: &M,
    g: &M,
    cost: &GroundCost,
    epsilon: f64,
) -> Result<f64> {
    check_convex(cost)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidPrecision(epsilon));
    }
    let scale = shared_scale(f, g)?;
    let (f, g) = ordered_pair(f, g);
    if cost.lambda() == Some(1.0) {
        if let (Some(fh), Some(gh)) = (f.as_histogram(), g.as_histogram()) {
            return cemd_weights(fh, gh).map(|(v, _)| v);
        }
        let fc = normalized_cumulative(f)?;
        let gc = normalized_cumulative(g)?;
        return Ok(cemd_cumulatives(&fc, &gc).0 * scale);
    }
    let fc = normalized_cumulative(f)?;
    let gc = normalized_cumulative(g)?;
    Ok(minimize_cumulatives(&fc, &gc, cost, scale, epsilon).1)
}

/// A value `m` minimizing `Σ wᵢ |vᵢ − m|`; the smallest one when several do.
///
/// Expected linear time by repeated selection.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::LengthMismatch(values.len(), weights.len()));
    }
    if values.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidWeight { index, value });
        }
    }
    let mut items: Vec<(f64, f64)> =
        values.iter().copied().zip(weights.iter().copied()).filter(|p| p.1 > 0.0).collect();
    let total: f64 = items.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let half = 0.5 * total;
    let mut below = 0.0;
    loop {
        if items.len() == 1 {
            return Ok(items[0].0);
        }
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |x, y| x.0.total_cmp(&y.0));
        let pivot = items[mid].0;
        let (mut lt, mut eq) = (0.0, 0.0);
        for &(v, w) in &items {
            if v < pivot {
                lt += w;
            } else if v == pivot {
                eq += w;
            }
        }
        if below + lt + eq < half {
            below += lt + eq;
            items.retain(|p| p.0 > pivot);
        } else if below + lt >= half {
            items.retain(|p| p.0 < pivot);
        } else {
            return Ok(pivot);
        }
        if items.is_empty() {
            return Ok(pivot);
        }
    }
}

fn check_pair(f: &Histogram, g: &Histogram) -> Result<()> {
    if f.bins() != g.bins() {
        return Err(Error::BinMismatch(f.bins(), g.bins()));
    }
    for h in [f, g] {
        if h.topology() != Topology::Circular {
            return Err(Error::WrongTopology(Topology::Circular));
        }
    }
    if f.bins() < 2 {
        return Err(Error::TooFewBins);
    }
    Ok(())
}

/// Cumulative differences `F[i] − G[i]` of the normalized histograms.
fn cumulative_differences(f: &Histogram, g: &Histogram) -> Result<Vec<f64>> {
    let f = f.normalized_or_warn()?;
    let g = g.normalized_or_warn()?;
    let (mut fa, mut ga) = (0.0, 0.0);
    Ok(f.weights()
        .iter()
        .zip(g.weights())
        .map(|(a, b)| {
            fa += a;
            ga += b;
            fa - ga
        })
        .collect())
}

fn cemd_weights(f: &Histogram, g: &Histogram) -> Result<(f64, f64)> {
    let d = cumulative_differences(f, g)?;
    let mut scratch = d.clone();
    let mid = (scratch.len() - 1) / 2;
    let (_, &mut mu, _) = scratch.select_nth_unstable_by(mid, f64::total_cmp);
    Ok((d.iter().map(|x| (x - mu).abs()).sum(), mu))
}

/// Circular EMD of two histograms in bin units: `Σ |F[i] − G[i] − μ|` with
/// `μ` the lower median of the cumulative differences.
pub fn cemd(f: &Histogram, g: &Histogram) -> Result<f64> {
    let (f, g) = ordered_pair(f, g);
    cemd_with_median(f, g).map(|(v, _)| v)
}

/// [`cemd`] together with the median `μ`.
pub fn cemd_with_median(f: &Histogram, g: &Histogram) -> Result<(f64, f64)> {
    check_pair(f, g)?;
    cemd_weights(f, g)
}

/// Median formula on arbitrary atoms, in perimeter units: the median of
/// `F − G` is weighted by the lengths of the intervals where it is constant.
fn cemd_cumulatives(fc: &CumulativeFunction, gc: &CumulativeFunction) -> (f64, f64) {
    let mut cuts: Vec<f64> = fc.breakpoints().iter().chain(gc.breakpoints()).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut values = Vec::with_capacity(cuts.len() + 1);
    let mut weights = Vec::with_capacity(cuts.len() + 1);
    // [0, first cut] and the tail past the last cut both carry F − G = 0
    values.push(0.0);
    weights.push(cuts[0] + 1.0 - cuts[cuts.len() - 1]);
    for w in cuts.windows(2) {
        values.push(fc.eval_right(w[0]) - gc.eval_right(w[0]));
        weights.push(w[1] - w[0]);
    }
    let mu = weighted_median(&values, &weights).unwrap_or(0.0);
    let cost = values.iter().zip(&weights).map(|(v, w)| w * (v - mu).abs()).sum();
    (cost, mu)
}

/// `min_k ‖F_k − G_k‖₁` over all cut bins `k`, in `O(N²)`.
pub fn cemd_bruteforce(f: &Histogram, g: &Histogram) -> Result<f64> {
    check_pair(f, g)?;
    let f = f.normalized_or_warn()?;
    let g = g.normalized_or_warn()?;
    let mut best = f64::INFINITY;
    for k in 0..f.bins() {
        let fk = shifted_cumulative(&f, k)?;
        let gk = shifted_cumulative(&g, k)?;
        let s: f64 = fk.values().iter().zip(gk.values()).map(|(a, b)| (a - b).abs()).sum();
        best = best.min(s);
    }
    Ok(best)
}

/// The optimal circular transfer `(H_t − α)⁻¹ ∘ H_u` with `α = −μ`, `μ` the
/// lower median of `H_u[i] − H_t[i]`.
pub fn circular_transfer_map(source: &Histogram, target: &Histogram) -> Result<TransferMap> {
    check_pair(source, target)?;
    let (_, mu) = cemd_weights(source, target)?;
    let fc = source.normalized_or_warn()?.cumulative();
    let gc = target.normalized_or_warn()?.cumulative();
    Ok(TransferMap::build(Topology::Circular, -mu, Some(source.bins()), fc, gc))
}

/// The optimal circular transfer for any convex increasing cost: the
/// quantile coupling at the minimizing shift of `φ`.
pub fn optimal_circular_map<M: Measure + ?Sized>(
    source: &M,
    target: &M,
    cost: &GroundCost,
    epsilon: f64,
) -> Result<TransferMap> {
    if let (Some(s), Some(t), Some(1.0)) = (source.as_histogram(), target.as_histogram(), cost.lambda()) {
        return circular_transfer_map(s, t);
    }
    let (alpha, _) = minimize_phi(source, target, cost, epsilon)?;
    let bins = source.as_histogram().map(Histogram::bins);
    let fc = normalized_cumulative(source)?;
    let gc = normalized_cumulative(target)?;
    Ok(TransferMap::build(Topology::Circular, alpha, bins, fc, gc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::PointMassDistribution;

    fn power(l: f64) -> GroundCost {
        GroundCost::power(l, Topology::Circular).unwrap()
    }

    fn dirac(n: usize, k: usize) -> Histogram {
        Histogram::dirac(n, k, Topology::Circular).unwrap()
    }

    fn point(x: f64) -> PointMassDistribution {
        PointMassDistribution::dirac(x).unwrap()
    }

    #[test]
    fn phi_examples() {
        let f = Histogram::circular(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(phi(&f, &f, &power(2.0), 0.0).unwrap(), 0.0);
        let z = point(0.0);
        assert!((phi(&z, &z, &power(1.0), 0.3).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn mk_circle_examples() {
        let v = mk_circle(&point(0.0), &point(0.5), &power(2.0), 1e-9).unwrap();
        assert!((v - 0.25).abs() < 1e-12);
        let v = mk_circle(&point(0.1), &point(0.9), &power(1.0), 1e-9).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        let (_, v) = minimize_phi(&point(0.1), &point(0.9), &power(1.0), 1e-9).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mk_circle_rejects() {
        let f = point(0.1);
        let c = GroundCost::exponential(1.0, Topology::Circular).unwrap();
        assert!(matches!(mk_circle(&f, &f, &c, 1e-9), Err(Error::NonConvexCost)));
        assert!(matches!(mk_circle(&f, &f, &power(2.0), 0.0), Err(Error::InvalidPrecision(_))));
    }

    #[test]
    fn weighted_median_examples() {
        assert_eq!(weighted_median(&[1.0, 2.0, 3.0], &[1.0; 3]).unwrap(), 2.0);
        assert_eq!(weighted_median(&[0.0, 10.0], &[0.9, 0.1]).unwrap(), 0.0);
        // even split: the lower median
        assert_eq!(weighted_median(&[4.0, 1.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(weighted_median(&[], &[]), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn cemd_examples() {
        let f = Histogram::circular(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(cemd(&f, &f).unwrap(), 0.0);
        assert_eq!(cemd(&dirac(4, 0), &dirac(4, 3)).unwrap(), 1.0);
        assert_eq!(cemd(&dirac(4, 0), &dirac(4, 2)).unwrap(), 2.0);
        assert_eq!(cemd_bruteforce(&dirac(8, 0), &dirac(8, 1)).unwrap(), 1.0);
        assert_eq!(cemd_bruteforce(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn cemd_errors() {
        let line = Histogram::linear(vec![0.5, 0.5]).unwrap();
        assert!(matches!(cemd(&line, &line), Err(Error::WrongTopology(_))));
        assert!(matches!(cemd(&dirac(3, 0), &dirac(4, 0)), Err(Error::BinMismatch(3, 4))));
        assert!(matches!(cemd(&dirac(1, 0), &dirac(1, 0)), Err(Error::TooFewBins)));
    }

    #[test]
    fn point_median_formula_matches_search() {
        let f = PointMassDistribution::new(vec![0.05, 0.4, 0.8], vec![0.2, 0.5, 0.3]).unwrap();
        let g = PointMassDistribution::new(vec![0.3, 0.95], vec![0.6, 0.4]).unwrap();
        let exact = mk_circle(&f, &g, &power(1.0), 1e-9).unwrap();
        let (_, searched) = minimize_phi(&f, &g, &power(1.0), 1e-9).unwrap();
        assert!((exact - searched).abs() < 1e-12, "{exact} vs {searched}");
    }

    #[test]
    fn transfer_map_shift_sign() {
        // bins {0, 1} onto bins {2, 3}: 0 -> 3 and 1 -> 2 wrap both ways at cost 1
        let f = Histogram::circular(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let g = Histogram::circular(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        let map = circular_transfer_map(&f, &g).unwrap();
        let c = power(1.0);
        assert!((map.transport_cost(&c) - cemd(&f, &g).unwrap()).abs() < 1e-12);
        assert_eq!(cemd(&f, &g).unwrap(), 1.0);
    }

    #[test]
    fn transfer_map_rotation() {
        let mut w = vec![0.0; 12];
        w[..4].copy_from_slice(&[0.1, 0.4, 0.2, 0.3]);
        let f = Histogram::circular(w).unwrap();
        // for k = 9 the median is not unique and the lower one picks a
        // different map of the same cost
        for k in 0..=3 {
            let g = f.rotate(k).unwrap();
            let map = circular_transfer_map(&f, &g).unwrap();
            for s in map.segments() {
                let i = (s.source * 12.0).round() as usize;
                let j = (s.target * 12.0).round() as usize;
                assert_eq!(j, (i + k) % 12, "k={k}");
            }
        }
    }

    #[test]
    fn transfer_map_cost_is_cemd() {
        // spread support: a rotation is not optimal here, but the map is
        let f = Histogram::circular(vec![0.1, 0.0, 0.4, 0.2, 0.0, 0.3]).unwrap();
        let c = power(1.0);
        for k in 0..6 {
            let g = f.rotate(k).unwrap();
            let map = circular_transfer_map(&f, &g).unwrap();
            assert!((map.transport_cost(&c) - cemd(&f, &g).unwrap()).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn optimal_map_cost_matches_distance() {
        let f = Histogram::circular(vec![0.1, 0.0, 0.4, 0.2, 0.0, 0.3]).unwrap();
        let g = Histogram::circular(vec![0.0, 0.3, 0.1, 0.0, 0.5, 0.1]).unwrap();
        for l in [1.0, 2.0, 3.0] {
            let cost = power(l);
            let map = optimal_circular_map(&f, &g, &cost, 1e-12).unwrap();
            let d = mk_circle(&f, &g, &cost, 1e-12).unwrap();
            assert!((map.transport_cost(&cost) - d).abs() < 1e-9, "λ={l}");
        }
        let xs = PointMassDistribution::uniform(vec![0.05, 0.3, 0.9]).unwrap();
        let ys = PointMassDistribution::uniform(vec![0.5, 0.6, 0.95]).unwrap();
        let cost = power(2.0);
        let map = optimal_circular_map(&xs, &ys, &cost, 1e-12).unwrap();
        assert!((map.transport_cost(&cost) - mk_circle(&xs, &ys, &cost, 1e-12).unwrap()).abs() < 1e-9);
    }
}
