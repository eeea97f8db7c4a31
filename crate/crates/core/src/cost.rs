//! Ground costs `c(x, y) = h(d(x, y))` on the line and the circle.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::histogram::Topology;

/// Geodesic distance on the circle of perimeter 1, in `[0, 1/2]`.
pub fn geodesic_distance(x: f64, y: f64) -> f64 {
    let t = (x - y).abs();
    t.min(1.0 - t)
}

/// Shape of the increasing function `h` applied to the ground distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostKind {
    /// `h(t) = t^λ`, `λ >= 1`.
    ConvexPower { lambda: f64 },
    /// `h(t) = 1 - exp(-t / τ)`.
    Exponential { tau: f64 },
    /// `h(t) = min(t, T)`.
    Thresholded { threshold: f64 },
    /// `h(t) = 1` if `t != 0`, else `0`.
    ZeroOne,
}

impl CostKind {
    fn validate(self) -> Result<Self> {
        let ok = match self {
            CostKind::ConvexPower { lambda } => lambda.is_finite() && lambda >= 1.0,
            CostKind::Exponential { tau } => tau.is_finite() && tau > 0.0,
            CostKind::Thresholded { threshold } => threshold.is_finite() && threshold >= 0.0,
            CostKind::ZeroOne => true,
        };
        if ok {
            Ok(self)
        } else {
            Err(Error::InvalidCost(self.to_string()))
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        match *self {
            CostKind::ConvexPower { lambda } => {
                if lambda == 1.0 {
                    t
                } else if lambda == 2.0 {
                    t * t
                } else if lambda == 3.0 {
                    t * t * t
                } else {
                    t.powf(lambda)
                }
            }
            CostKind::Exponential { tau } => 1.0 - (-t / tau).exp(),
            CostKind::Thresholded { threshold } => t.min(threshold),
            CostKind::ZeroOne => {
                if t != 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::ConvexPower { lambda } => write!(f, "power:{lambda}"),
            CostKind::Exponential { tau } => write!(f, "exp:{tau}"),
            CostKind::Thresholded { threshold } => write!(f, "thresh:{threshold}"),
            CostKind::ZeroOne => f.write_str("zeroone"),
        }
    }
}

/// Parses `power:LAMBDA`, `exp:TAU`, `thresh:T` or `zeroone`.
impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let param = |default: f64| -> Result<f64> {
            match arg {
                None => Ok(default),
                Some(a) => a
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidCost(format!("bad parameter in `{s}`"))),
            }
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "power" | "pow" => CostKind::ConvexPower { lambda: param(1.0)? },
            "exp" => CostKind::Exponential { tau: param(1.0)? },
            "thresh" | "threshold" => CostKind::Thresholded { threshold: param(2.0)? },
            "zeroone" | "zero-one" | "01" => CostKind::ZeroOne,
            _ => return Err(Error::InvalidCost(format!("unknown cost `{s}`"))),
        };
        kind.validate()
    }
}

/// A cost variant together with the topology that defines `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundCost {
    kind: CostKind,
    topology: Topology,
}

impl GroundCost {
    pub fn new(kind: CostKind, topology: Topology) -> Result<Self> {
        Ok(Self { kind: kind.validate()?, topology })
    }

    pub fn power(lambda: f64, topology: Topology) -> Result<Self> {
        Self::new(CostKind::ConvexPower { lambda }, topology)
    }

    pub fn exponential(tau: f64, topology: Topology) -> Result<Self> {
        Self::new(CostKind::Exponential { tau }, topology)
    }

    pub fn thresholded(threshold: f64, topology: Topology) -> Result<Self> {
        Self::new(CostKind::Thresholded { threshold }, topology)
    }

    pub fn zero_one(topology: Topology) -> Self {
        Self { kind: CostKind::ZeroOne, topology }
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// The exponent for convex power costs.
    pub fn lambda(&self) -> Option<f64> {
        match self.kind {
            CostKind::ConvexPower { lambda } => Some(lambda),
            _ => None,
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        self.kind.h(t)
    }

    /// Ground distance between positions in `[0, 1)`.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        match self.topology {
            Topology::Circular => geodesic_distance(x, y),
            Topology::Linear => (x - y).abs(),
        }
    }

    /// `h(d(x, y))` for positions in perimeter units.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        self.h(self.distance(x, y))
    }

    /// `h(d(i, j))` for bins of an `n`-bin histogram, distances in bin units.
    pub fn evaluate_bins(&self, i: usize, j: usize, n: usize) -> f64 {
        self.h(bin_distance(i, j, n, self.topology) as f64)
    }

    /// True exactly for the convex power family; drives the choice between
    /// the quantile solvers and the exact transport solver.
    pub fn is_convex_increasing(&self) -> bool {
        matches!(self.kind, CostKind::ConvexPower { .. })
    }

    /// True when `h∘d` satisfies the triangle inequality with `h(0) = 0`,
    /// i.e. when shared mass may stay in place in an optimal plan.
    pub fn is_metric(&self) -> bool {
        match self.kind {
            CostKind::ConvexPower { lambda } => lambda == 1.0,
            _ => true,
        }
    }
}

impl fmt::Display for GroundCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.kind, self.topology)
    }
}

/// Integer ground distance between bins.
pub fn bin_distance(i: usize, j: usize, n: usize, topology: Topology) -> usize {
    let t = i.abs_diff(j);
    match topology {
        Topology::Circular => t.min(n - t),
        Topology::Linear => t,
    }
}
