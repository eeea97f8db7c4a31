//! Discrete distributions on the line and the circle.
//!
//! Positions live on `[0, 1)`, read either as a segment of the real line or as
//! the circle of perimeter 1. Bin `i` of an `N`-bin [`Histogram`] carries its
//! mass at position `i / N`. Cumulative functions are left-continuous step
//! functions, `F(y) = mass in [0, y)`, extended to the real line by
//! `F(y + 1) = F(y) + total`.

use std::borrow::Cow;

use crate::error::{Error, Result};

/// Tolerance under which a total mass is considered equal to 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Linear,
    Circular,
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" | "line" => Ok(Topology::Linear),
            "circular" | "circle" => Ok(Topology::Circular),
            other => Err(Error::InvalidParameter(format!("unknown topology `{other}`"))),
        }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Topology::Linear => f.write_str("linear"),
            Topology::Circular => f.write_str("circular"),
        }
    }
}

/// Anything that can be read as a finite set of weighted atoms on `[0, 1)`.
pub trait Measure {
    /// `(position, mass)` pairs; zero masses are allowed.
    fn atoms(&self) -> Vec<(f64, f64)>;

    fn total(&self) -> f64;

    /// Factor converting perimeter-1 distances to the measure's natural unit:
    /// `N` for histograms (bin units), `1` for point masses.
    fn unit_scale(&self) -> f64;

    fn as_histogram(&self) -> Option<&Histogram> {
        None
    }
}

/// Nonnegative weights on `N` uniform bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    weights: Vec<f64>,
    topology: Topology,
}

impl Histogram {
    pub fn new(weights: Vec<f64>, topology: Topology) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        Ok(Self { weights, topology })
    }

    pub fn linear(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, Topology::Linear)
    }

    pub fn circular(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights, Topology::Circular)
    }

    /// A unit mass on a single bin.
    pub fn dirac(bins: usize, bin: usize, topology: Topology) -> Result<Self> {
        if bin >= bins {
            return Err(Error::BinOutOfRange { index: bin, bins });
        }
        let mut weights = vec![0.0; bins];
        weights[bin] = 1.0;
        Self::new(weights, topology)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn with_topology(mut self, topology: Topology) -> Self {
        self.topology = topology;
        self
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// Scales the weights to unit total mass.
    ///
    /// The division is applied twice so that the residual round-off of the
    /// first pass is removed by the second.
    pub fn normalize(&self) -> Result<Self> {
        let weights = normalized_weights(&self.weights)?;
        Ok(Self { weights, topology: self.topology })
    }

    /// Returns `self` when already normalized, otherwise a normalized copy
    /// and a warning on the log channel.
    pub fn normalized_or_warn(&self) -> Result<Cow<'_, Self>> {
        let total = self.total();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        if (total - 1.0).abs() <= NORMALIZATION_TOLERANCE {
            Ok(Cow::Borrowed(self))
        } else {
            log::warn!("histogram mass {total} differs from 1; normalizing");
            self.normalize().map(Cow::Owned)
        }
    }

    /// Cyclic shift: the mass of bin `i` moves to bin `(i + k) mod N`.
    pub fn rotate(&self, k: usize) -> Result<Self> {
        if self.topology != Topology::Circular {
            return Err(Error::WrongTopology(Topology::Circular));
        }
        let n = self.bins();
        let mut weights = self.weights.clone();
        weights.rotate_right(k % n);
        Ok(Self { weights, topology: self.topology })
    }

    /// Inclusive cumulative histogram `F[i] = f[0] + ... + f[i]`.
    pub fn cumulative_bins(&self) -> Vec<f64> {
        self.weights
            .iter()
            .scan(0.0, |acc, &w| {
                *acc += w;
                Some(*acc)
            })
            .collect()
    }

    /// The same masses read as point masses at `i / N`, zero bins dropped.
    pub fn to_points(&self) -> Result<PointMassDistribution> {
        let n = self.bins() as f64;
        let (positions, masses): (Vec<f64>, Vec<f64>) = self
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(i, &w)| (i as f64 / n, w))
            .unzip();
        PointMassDistribution::new(positions, masses)
    }

    pub fn cumulative(&self) -> CumulativeFunction {
        let n = self.bins() as f64;
        CumulativeFunction::from_sorted(
            (0..self.bins()).map(|i| i as f64 / n).collect(),
            self.weights.clone(),
        )
    }
}

impl Measure for Histogram {
    fn atoms(&self) -> Vec<(f64, f64)> {
        let n = self.bins() as f64;
        self.weights.iter().enumerate().map(|(i, &w)| (i as f64 / n, w)).collect()
    }

    fn total(&self) -> f64 {
        Histogram::total(self)
    }

    fn unit_scale(&self) -> f64 {
        self.bins() as f64
    }

    fn as_histogram(&self) -> Option<&Histogram> {
        Some(self)
    }
}

/// Weighted point masses on the perimeter-1 circle (or on `[0, 1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassDistribution {
    positions: Vec<f64>,
    masses: Vec<f64>,
}

impl PointMassDistribution {
    pub fn new(positions: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if positions.len() != masses.len() {
            return Err(Error::LengthMismatch(positions.len(), masses.len()));
        }
        if positions.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for &p in &positions {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::PositionOutOfRange(p));
            }
        }
        for (index, &value) in masses.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidMass { index, value });
            }
        }
        Ok(Self { positions, masses })
    }

    /// `P` points of mass `1 / P` each.
    pub fn uniform(positions: Vec<f64>) -> Result<Self> {
        let m = 1.0 / positions.len().max(1) as f64;
        let masses = vec![m; positions.len()];
        Self::new(positions, masses)
    }

    pub fn dirac(position: f64) -> Result<Self> {
        Self::new(vec![position], vec![1.0])
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.total() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    pub fn normalize(&self) -> Result<Self> {
        let masses = normalized_weights(&self.masses)?;
        Ok(Self { positions: self.positions.clone(), masses })
    }

    pub fn normalized_or_warn(&self) -> Result<Cow<'_, Self>> {
        let total = self.total();
        if (total - 1.0).abs() <= NORMALIZATION_TOLERANCE {
            Ok(Cow::Borrowed(self))
        } else {
            log::warn!("point-mass total {total} differs from 1; normalizing");
            self.normalize().map(Cow::Owned)
        }
    }

    pub fn cumulative(&self) -> CumulativeFunction {
        CumulativeFunction::from_atoms(self.atoms())
            .expect("point-mass distributions are nonempty")
    }
}

impl Measure for PointMassDistribution {
    fn atoms(&self) -> Vec<(f64, f64)> {
        self.positions.iter().copied().zip(self.masses.iter().copied()).collect()
    }

    fn total(&self) -> f64 {
        PointMassDistribution::total(self)
    }

    fn unit_scale(&self) -> f64 {
        1.0
    }
}

fn normalized_weights(weights: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroMass);
    }
    let mut out: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let again: f64 = out.iter().sum();
    if again != 1.0 {
        out.iter_mut().for_each(|w| *w /= again);
    }
    Ok(out)
}

/// Returns the measure normalized to unit mass, warning when it was not.
pub(crate) fn normalized_atoms<M: Measure + ?Sized>(m: &M) -> Result<Vec<(f64, f64)>> {
    let total = m.total();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let atoms = m.atoms();
    if (total - 1.0).abs() <= NORMALIZATION_TOLERANCE {
        return Ok(atoms);
    }
    log::warn!("distribution mass {total} differs from 1; normalizing");
    let weights: Vec<f64> = atoms.iter().map(|a| a.1).collect();
    let weights = normalized_weights(&weights)?;
    Ok(atoms.into_iter().zip(weights).map(|((p, _), w)| (p, w)).collect())
}

/// Left-continuous cumulative step function with periodic extension.
///
/// Stored run-length: one entry per distinct atom position, with the atom's
/// mass and the cumulative value just after it. Zero-mass atoms are kept so
/// that histogram cumulatives keep one step per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeFunction {
    positions: Vec<f64>,
    masses: Vec<f64>,
    values: Vec<f64>,
}

impl CumulativeFunction {
    /// Builds the cumulative of arbitrary `(position, mass)` atoms on `[0, 1)`.
    /// Coincident positions are merged.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for (index, &(p, m)) in atoms.iter().enumerate() {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::PositionOutOfRange(p));
            }
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidWeight { index, value: m });
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut positions: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            match positions.last() {
                Some(&last) if last == p => *masses.last_mut().unwrap() += m,
                _ => {
                    positions.push(p);
                    masses.push(m);
                }
            }
        }
        Ok(Self::from_sorted(positions, masses))
    }

    /// `positions` strictly increasing in `[0, 1)`.
    pub(crate) fn from_sorted(positions: Vec<f64>, masses: Vec<f64>) -> Self {
        let values = masses
            .iter()
            .scan(0.0, |acc, &m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Self { positions, masses, values }
    }

    /// Atom positions (the step locations).
    pub fn breakpoints(&self) -> &[f64] {
        &self.positions
    }

    /// Cumulative value immediately to the right of each breakpoint.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        *self.values.last().expect("nonempty")
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `F(y)`: mass in `[0, y)` with `F(y + 1) = F(y) + total`.
    pub fn eval(&self, y: f64) -> f64 {
        let k = y.floor();
        let r = y - k;
        let idx = self.positions.partition_point(|&p| p < r);
        let inside = if idx == 0 { 0.0 } else { self.values[idx - 1] };
        k * self.total() + inside
    }

    /// Right limit `F(y+)`: mass in `[0, y]`, periodically extended.
    pub fn eval_right(&self, y: f64) -> f64 {
        let k = y.floor();
        let r = y - k;
        let idx = self.positions.partition_point(|&p| p <= r);
        let inside = if idx == 0 { 0.0 } else { self.values[idx - 1] };
        k * self.total() + inside
    }

    /// `F⁻¹(y) = inf { t : F(t) > y }` on the periodic extension.
    ///
    /// For the left-continuous `F` this is the exact Galois adjoint:
    /// `F(t) <= y` iff `t <= F⁻¹(y)`.
    pub fn pseudo_inverse(&self, y: f64) -> f64 {
        let total = self.total();
        let mut k = (y / total).floor();
        let r = y - k * total;
        let mut idx = self.values.partition_point(|&v| v <= r);
        if idx == self.values.len() {
            // r rounded up to the total: first positive atom of the next period
            k += 1.0;
            idx = self.values.partition_point(|&v| v <= 0.0);
        }
        k + self.positions[idx]
    }

    /// `F_x(y) = F(x + y) - F(x)`: the cumulative re-based at `x`.
    pub fn x_cumulative(&self, x: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::PositionOutOfRange(x));
        }
        let split = self.positions.partition_point(|&p| p < x);
        let n = self.positions.len();
        let mut positions = Vec::with_capacity(n);
        let mut masses = Vec::with_capacity(n);
        for idx in (split..n).chain(0..split) {
            let p = self.positions[idx] - x;
            positions.push(if p < 0.0 { p + 1.0 } else { p });
            masses.push(self.masses[idx]);
        }
        Ok(Self::from_sorted(positions, masses))
    }
}

/// Puts a pair in a fixed order, so that distances computed on it are
/// bitwise symmetric in their arguments.
pub(crate) fn ordered_pair<'a, M: Measure + ?Sized>(f: &'a M, g: &'a M) -> (&'a M, &'a M) {
    let lexicographic = |a: &[f64], b: &[f64]| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len()))
    };
    let order = match (f.as_histogram(), g.as_histogram()) {
        (Some(a), Some(b)) => lexicographic(a.weights(), b.weights()),
        _ => {
            let flat = |m: &M| m.atoms().into_iter().flat_map(|(x, w)| [x, w]).collect::<Vec<f64>>();
            lexicographic(&flat(f), &flat(g))
        }
    };
    if order.is_gt() {
        (g, f)
    } else {
        (f, g)
    }
}

/// Cumulative function of a histogram or point-mass distribution.
pub fn cumulative<M: Measure + ?Sized>(m: &M) -> Result<CumulativeFunction> {
    match m.as_histogram() {
        Some(h) => Ok(h.cumulative()),
        None => CumulativeFunction::from_atoms(m.atoms()),
    }
}

/// Cumulative histogram read cyclically from bin `k`: breakpoint `j / N`
/// carries bin `(k + j) mod N`, so the first value is the mass of bin `k`.
pub fn shifted_cumulative(f: &Histogram, k: usize) -> Result<CumulativeFunction> {
    let n = f.bins();
    if k >= n {
        return Err(Error::BinOutOfRange { index: k, bins: n });
    }
    let nf = n as f64;
    let positions = (0..n).map(|j| j as f64 / nf).collect();
    let masses = (0..n).map(|j| f.weights[(k + j) % n]).collect();
    Ok(CumulativeFunction::from_sorted(positions, masses))
}
