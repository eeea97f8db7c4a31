//! One entry point over every cost variant and topology.

use crate::circle::mk_circle;
use crate::cost::GroundCost;
use crate::error::Result;
use crate::histogram::{ordered_pair, Measure, Topology};
use crate::line::{mk_line, root};
use crate::oracle::{mk_concave, solve_transport};

/// Default precision of the shift search on the circle.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Raw `MK_c(f, g)`, routed to the quantile solvers for convex costs and to
/// the exact solver otherwise.
pub fn mk_cost<M: Measure + ?Sized>(f: &M, g: &M, cost: &GroundCost, epsilon: f64) -> Result<f64> {
    if cost.is_convex_increasing() {
        return match cost.topology() {
            Topology::Linear => mk_line(f, g, cost),
            Topology::Circular => mk_circle(f, g, cost, epsilon),
        };
    }
    match (f.as_histogram(), g.as_histogram()) {
        (Some(fh), Some(gh)) => mk_concave(fh, gh, cost),
        _ => {
            let (f, g) = ordered_pair(f, g);
            Ok(solve_transport(f, g, cost)?.cost)
        }
    }
}

/// `MK_λ = (MK_c)^{1/λ}` for power costs, `MK_c` for the others.
pub fn mk_distance<M: Measure + ?Sized>(f: &M, g: &M, cost: &GroundCost, epsilon: f64) -> Result<f64> {
    Ok(root(mk_cost(f, g, cost, epsilon)?, cost))
}
