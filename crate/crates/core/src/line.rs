//! Optimal transport on the real line.
//!
//! For a convex increasing `h`, the monotone rearrangement is optimal and the
//! cost is `∫₀¹ h(|F⁻¹(t) − G⁻¹(t)|) dt`. Both quantile functions are step
//! functions, so the integral is an exact sum over the merged quantile levels.

use crate::cost::{bin_distance, GroundCost};
use crate::error::{Error, Result};
use crate::histogram::{normalized_atoms, ordered_pair, CumulativeFunction, Histogram, Measure, Topology};

/// Walks the quantile function of a cumulative, optionally periodically.
struct QuantileCursor<'a> {
    cdf: &'a CumulativeFunction,
    idx: usize,
    period: f64,
    periodic: bool,
}

impl<'a> QuantileCursor<'a> {
    fn at_level(cdf: &'a CumulativeFunction, level: f64, periodic: bool) -> Self {
        let values = cdf.values();
        let last = values.len() - 1;
        if !periodic {
            let idx = values.partition_point(|&v| v <= level).min(last);
            return Self { cdf, idx, period: 0.0, periodic };
        }
        let total = cdf.total();
        let mut period = (level / total).floor();
        let r = level - period * total;
        let mut idx = values.partition_point(|&v| v <= r);
        if idx > last {
            period += 1.0;
            idx = values.partition_point(|&v| v <= 0.0);
        }
        Self { cdf, idx, period, periodic }
    }

    /// Level at which the current quantile step ends.
    fn end(&self) -> f64 {
        let values = self.cdf.values();
        if self.periodic {
            self.period * self.cdf.total() + values[self.idx]
        } else if self.idx + 1 == values.len() {
            f64::INFINITY
        } else {
            values[self.idx]
        }
    }

    fn base_position(&self) -> f64 {
        self.cdf.breakpoints()[self.idx]
    }

    fn position(&self) -> f64 {
        self.period + self.base_position()
    }

    fn advance(&mut self) {
        let len = self.cdf.len();
        self.idx += 1;
        if self.idx == len {
            if self.periodic {
                self.idx = 0;
                self.period += 1.0;
            } else {
                self.idx = len - 1;
            }
        }
    }
}

/// One piece of the merged quantile sweep.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuantilePiece {
    pub start: f64,
    pub end: f64,
    /// `F⁻¹` on the piece.
    pub source: f64,
    /// `G⁻¹(t + shift)` on the piece, unrolled (may leave `[0, 1)`).
    pub target: f64,
    /// The same target breakpoint, in `[0, 1)`.
    pub target_base: f64,
}

/// Visits the pieces of `t ↦ (F⁻¹(t), G⁻¹(t + shift))` over `t ∈ [0, total_F)`.
/// Zero-length pieces are skipped.
pub(crate) fn sweep(
    f: &CumulativeFunction,
    g: &CumulativeFunction,
    shift: f64,
    periodic: bool,
    mut visit: impl FnMut(QuantilePiece),
) {
    let total = f.total();
    let mut fc = QuantileCursor::at_level(f, 0.0, false);
    let mut gc = QuantileCursor::at_level(g, shift, periodic);
    let mut q = 0.0;
    while q < total {
        let fe = fc.end();
        let ge = gc.end() - shift;
        let next = fe.min(ge).min(total);
        if next > q {
            visit(QuantilePiece {
                start: q,
                end: next,
                source: fc.position(),
                target: gc.position(),
                target_base: gc.base_position(),
            });
            q = next;
        }
        if fe <= q {
            fc.advance();
        }
        if ge <= q {
            gc.advance();
        }
    }
}

/// Sum of `length · h(scale · |F⁻¹ − G⁻¹(· + shift)|)` over the sweep.
pub(crate) fn quantile_cost(
    f: &CumulativeFunction,
    g: &CumulativeFunction,
    shift: f64,
    periodic: bool,
    cost: &GroundCost,
    scale: f64,
) -> f64 {
    let mut acc = 0.0;
    sweep(f, g, shift, periodic, |p| {
        acc += (p.end - p.start) * cost.h(scale * (p.source - p.target).abs());
    });
    acc
}

/// Common unit scale of two measures (bins for histograms, 1 for points).
pub(crate) fn shared_scale<M: Measure + ?Sized>(f: &M, g: &M) -> Result<f64> {
    let (a, b) = (f.unit_scale(), g.unit_scale());
    if a != b {
        return Err(Error::BinMismatch(a as usize, b as usize));
    }
    Ok(a)
}

/// Cumulative of the measure after normalization (with a warning if needed).
pub(crate) fn normalized_cumulative<M: Measure + ?Sized>(m: &M) -> Result<CumulativeFunction> {
    match m.as_histogram() {
        Some(h) => Ok(h.normalized_or_warn()?.cumulative()),
        None => CumulativeFunction::from_atoms(normalized_atoms(m)?),
    }
}

/// `MK_c(f, g)` on the real line for a convex increasing cost.
///
/// Histograms are measured in bin units, point masses in perimeter units.
/// The returned value is the raw transport cost; see [`mk_distance_line`].
pub fn mk_line<M: Measure + ?Sized>(f: &M, g: &M, cost: &GroundCost) -> Result<f64> {
    if !cost.is_convex_increasing() {
        return Err(Error::NonConvexCost);
    }
    let scale = shared_scale(f, g)?;
    let (f, g) = ordered_pair(f, g);
    let fc = normalized_cumulative(f)?;
    let gc = normalized_cumulative(g)?;
    Ok(quantile_cost(&fc, &gc, 0.0, false, cost, scale))
}

/// `MK_λ = (MK_c)^{1/λ}` on the line.
pub fn mk_distance_line<M: Measure + ?Sized>(f: &M, g: &M, cost: &GroundCost) -> Result<f64> {
    let raw = mk_line(f, g, cost)?;
    Ok(root(raw, cost))
}

/// Applies the `1/λ` root for power costs; identity otherwise.
pub fn root(raw: f64, cost: &GroundCost) -> f64 {
    match cost.lambda() {
        Some(l) if l != 1.0 => raw.max(0.0).powf(1.0 / l),
        _ => raw,
    }
}

/// Linear EMD of two histograms, `Σ |F[i] − G[i]|` over cumulative histograms.
pub fn emd_line_histograms(f: &Histogram, g: &Histogram) -> Result<f64> {
    if f.bins() != g.bins() {
        return Err(Error::BinMismatch(f.bins(), g.bins()));
    }
    let f = f.normalized_or_warn()?;
    let g = g.normalized_or_warn()?;
    let (mut fa, mut ga, mut acc) = (0.0, 0.0, 0.0);
    for (a, b) in f.weights().iter().zip(g.weights()) {
        fa += a;
        ga += b;
        acc += (fa - ga).abs();
    }
    Ok(acc)
}

/// A piece of a transfer map: the source quantiles `[quantile_start,
/// quantile_end)` located at `source` are sent to `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSegment {
    pub quantile_start: f64,
    pub quantile_end: f64,
    pub source: f64,
    pub target: f64,
}

impl MapSegment {
    pub fn mass(&self) -> f64 {
        self.quantile_end - self.quantile_start
    }
}

/// The optimal transfer `(G − α)⁻¹ ∘ F` between two distributions, kept at
/// sub-atom resolution: the mass of one source atom may split across several
/// target atoms. `α = 0` for the monotone rearrangement on the line.
#[derive(Debug, Clone)]
pub struct TransferMap {
    topology: Topology,
    shift: f64,
    bins: Option<usize>,
    source: CumulativeFunction,
    target: CumulativeFunction,
    segments: Vec<MapSegment>,
}

impl TransferMap {
    pub(crate) fn build(
        topology: Topology,
        shift: f64,
        bins: Option<usize>,
        source: CumulativeFunction,
        target: CumulativeFunction,
    ) -> Self {
        let periodic = topology == Topology::Circular;
        let mut segments = Vec::new();
        sweep(&source, &target, shift, periodic, |p| {
            segments.push(MapSegment {
                quantile_start: p.start,
                quantile_end: p.end,
                source: p.source,
                target: p.target_base,
            });
        });
        Self { topology, shift, bins, source, target, segments }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// The level shift `α` (zero on the line).
    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn bins(&self) -> Option<usize> {
        self.bins
    }

    pub fn segments(&self) -> &[MapSegment] {
        &self.segments
    }

    /// The image of the source distribution, as a cumulative function.
    pub fn pushforward(&self) -> Result<CumulativeFunction> {
        CumulativeFunction::from_atoms(self.segments.iter().map(|s| (s.target, s.mass())).collect())
    }

    /// Total cost of moving the mass along the map. Bin units for histogram
    /// maps, perimeter units otherwise.
    pub fn transport_cost(&self, cost: &GroundCost) -> f64 {
        let dist_topology = self.topology;
        self.segments
            .iter()
            .map(|s| {
                let c = match self.bins {
                    Some(n) => {
                        let i = (s.source * n as f64).round() as usize % n;
                        let j = (s.target * n as f64).round() as usize % n;
                        cost.h(bin_distance(i, j, n, dist_topology) as f64)
                    }
                    None => {
                        let d = match dist_topology {
                            Topology::Circular => crate::cost::geodesic_distance(s.source, s.target),
                            Topology::Linear => (s.source - s.target).abs(),
                        };
                        cost.h(d)
                    }
                };
                s.mass() * c
            })
            .sum()
    }

    /// `(G − α)⁻¹(q)` as a position in `[0, 1)`.
    pub fn target_at_quantile(&self, q: f64) -> f64 {
        let periodic = self.topology == Topology::Circular;
        let cursor = QuantileCursor::at_level(&self.target, q + self.shift, periodic);
        cursor.base_position()
    }

    /// Maps a position through the transfer.
    ///
    /// For histogram maps, a position a fraction `t` through bin `i` is sent
    /// to the same fraction through the image of that bin's quantile
    /// interval, reading the target as uniform within each bin. For
    /// point-mass maps, an atom is sent to the target of its median quantile.
    pub fn apply(&self, x: f64) -> f64 {
        let circular = self.topology == Topology::Circular;
        let Some(n) = self.bins else {
            let q = 0.5 * (self.source.eval(x) + self.source.eval_right(x));
            return self.target_at_quantile(q);
        };
        let nf = n as f64;
        let xn = x * nf;
        let i = (xn.floor().max(0.0) as usize).min(n - 1);
        let t = (xn - i as f64).clamp(0.0, 1.0);
        let fi = self.source.masses()[i];
        let q = self.source.values()[i] - fi + t * fi;
        let s = q + self.shift;
        let total = self.target.total();
        let (k, r) = if circular {
            let k = (s / total).floor();
            (k, s - k * total)
        } else {
            (0.0, s.clamp(0.0, total))
        };
        let values = self.target.values();
        let j = values.partition_point(|&v| v <= r).min(n - 1);
        let gj = self.target.masses()[j];
        let frac = if gj > 0.0 { ((r - (values[j] - gj)) / gj).clamp(0.0, 1.0) } else { 0.0 };
        let y = (j as f64 + frac) / nf;
        if circular {
            let y = (y + k).rem_euclid(1.0);
            if y >= 1.0 {
                0.0
            } else {
                y
            }
        } else {
            y
        }
    }
}

/// The monotone rearrangement `H_t⁻¹ ∘ H_u` (histogram specification).
pub fn monotone_transfer_map<M: Measure + ?Sized>(source: &M, target: &M) -> Result<TransferMap> {
    shared_scale(source, target)?;
    let bins = source.as_histogram().map(Histogram::bins);
    let fc = normalized_cumulative(source)?;
    let gc = normalized_cumulative(target)?;
    Ok(TransferMap::build(Topology::Linear, 0.0, bins, fc, gc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::PointMassDistribution;

    fn power(l: f64) -> GroundCost {
        GroundCost::power(l, Topology::Linear).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        let f = Histogram::linear(vec![0.1, 0.4, 0.2, 0.3]).unwrap();
        assert_eq!(mk_line(&f, &f, &power(2.0)).unwrap(), 0.0);
        assert_eq!(emd_line_histograms(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn single_atom_moves() {
        let f = PointMassDistribution::dirac(0.0).unwrap();
        let g = PointMassDistribution::dirac(0.4).unwrap();
        assert!((mk_line(&f, &g, &power(1.0)).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn half_masses_move_two_bins() {
        let f = Histogram::linear(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let g = Histogram::linear(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        assert!((mk_line(&f, &g, &power(1.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((emd_line_histograms(&f, &g).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dirac_across_three_bins() {
        let f = Histogram::dirac(4, 0, Topology::Linear).unwrap();
        let g = Histogram::dirac(4, 3, Topology::Linear).unwrap();
        assert_eq!(emd_line_histograms(&f, &g).unwrap(), 3.0);
    }

    #[test]
    fn concave_rejected() {
        let f = Histogram::linear(vec![1.0]).unwrap();
        let c = GroundCost::exponential(1.0, Topology::Linear).unwrap();
        assert!(matches!(mk_line(&f, &f, &c), Err(Error::NonConvexCost)));
    }

    #[test]
    fn mismatched_bins() {
        let f = Histogram::linear(vec![1.0, 0.0]).unwrap();
        let g = Histogram::linear(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(emd_line_histograms(&f, &g), Err(Error::BinMismatch(2, 3))));
        assert!(matches!(mk_line(&f, &g, &power(1.0)), Err(Error::BinMismatch(2, 3))));
    }

    #[test]
    fn identity_map() {
        let f = Histogram::linear(vec![0.2, 0.0, 0.5, 0.3]).unwrap();
        let map = monotone_transfer_map(&f, &f).unwrap();
        for s in map.segments() {
            assert_eq!(s.source, s.target);
        }
    }

    #[test]
    fn collapse_to_single_atom() {
        let f = PointMassDistribution::uniform((0..10).map(|i| i as f64 / 10.0).collect()).unwrap();
        let g = PointMassDistribution::dirac(0.5).unwrap();
        let map = monotone_transfer_map(&f, &g).unwrap();
        assert!(map.segments().iter().all(|s| s.target == 0.5));
    }

    #[test]
    fn split_bin_pushforward() {
        let f = Histogram::linear(vec![0.5, 0.5]).unwrap();
        let g = Histogram::linear(vec![0.25, 0.75]).unwrap();
        let map = monotone_transfer_map(&f, &g).unwrap();
        // bin 0 -> 0 for its first half, then bin 0 -> 1, bin 1 -> 1
        let segs: Vec<(f64, f64, f64)> =
            map.segments().iter().map(|s| (s.mass(), s.source, s.target)).collect();
        assert_eq!(segs, vec![(0.25, 0.0, 0.0), (0.25, 0.0, 0.5), (0.5, 0.5, 0.5)]);
        let pushed = map.pushforward().unwrap();
        assert_eq!(pushed.breakpoints(), g.cumulative().breakpoints());
        assert_eq!(pushed.values(), g.cumulative().values());
    }

    #[test]
    fn apply_is_histogram_specification() {
        let f = Histogram::linear(vec![0.5, 0.5]).unwrap();
        let g = Histogram::linear(vec![0.25, 0.75]).unwrap();
        let map = monotone_transfer_map(&f, &g).unwrap();
        // source quantile 0.25 sits at the boundary of target bin 0
        assert!((map.apply(0.25) - 0.5).abs() < 1e-15);
        assert!((map.apply(0.0) - 0.0).abs() < 1e-15);
        // quantile 0.75 is two thirds through target bin 1
        assert!((map.apply(0.75) - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
    }
}
