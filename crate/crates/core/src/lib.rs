//! Monge-Kantorovich distances between discrete distributions on the line
//! and on the circle.
//!
//! Convex costs `h(d)` go through quantile functions: a merged sweep on the
//! line, and a one-parameter search over level shifts on the circle, which
//! for `h(t) = t` is the linear-time median formula [`cemd`]. Concave costs
//! go through an exact transportation solver.

pub mod bench;
pub mod circle;
pub mod cost;
pub mod distance;
pub mod error;
pub mod histogram;
pub mod hue;
pub mod io;
pub mod line;
pub mod oracle;
pub mod ppm;
pub mod selftest;
mod simplex;

pub use circle::{cemd, cemd_bruteforce, cemd_with_median, circular_transfer_map, minimize_phi, mk_circle, optimal_circular_map, phi, weighted_median};
pub use cost::{geodesic_distance, CostKind, GroundCost};
pub use distance::{mk_cost, mk_distance, DEFAULT_EPSILON};
pub use error::{Error, Result};
pub use histogram::{cumulative, shifted_cumulative, CumulativeFunction, Histogram, Measure, PointMassDistribution, Topology};
pub use line::{emd_line_histograms, mk_distance_line, mk_line, monotone_transfer_map, MapSegment, TransferMap};
pub use oracle::{
    find_uncrossed_point, mk_concave, mk_concave_full, solve_assignment, solve_assignment_exhaustive, solve_transport,
    GeodesicArc, TransportPlan, TransportSolution,
};
