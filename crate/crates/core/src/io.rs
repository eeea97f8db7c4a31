//! Text formats for distributions, transfer maps and transport plans.
//!
//! Histograms: one per line, comma-separated weights, with an optional
//! header `# topology=circular bins=N`. Point masses: `position,mass` lines.
//! Blank lines and other `#` lines are ignored.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::histogram::{Histogram, PointMassDistribution, Topology};
use crate::line::TransferMap;
use crate::oracle::TransportPlan;

fn parse_number(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("line {line}: cannot parse `{}` as a number", s.trim())))
}

/// Reads the `key=value` pairs of a header line.
fn parse_header(line: &str, topology: &mut Option<Topology>, bins: &mut Option<usize>) -> Result<()> {
    for kv in line.trim_start_matches('#').split_whitespace() {
        let Some((k, v)) = kv.split_once('=') else { continue };
        match k {
            "topology" => *topology = Some(v.parse()?),
            "bins" => {
                *bins = Some(v.parse().map_err(|_| Error::Format(format!("bad bin count `{v}`")))?);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Parses histogram text. A header topology overrides `default_topology`.
pub fn parse_histograms(text: &str, default_topology: Topology) -> Result<Vec<Histogram>> {
    let mut topology = None;
    let mut bins = None;
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            parse_header(line, &mut topology, &mut bins)?;
            continue;
        }
        let weights = line.split(',').map(|s| parse_number(s, k + 1)).collect::<Result<Vec<f64>>>()?;
        if let Some(n) = bins {
            if weights.len() != n {
                return Err(Error::Format(format!(
                    "line {}: {} weights but the header declares {n} bins",
                    k + 1,
                    weights.len()
                )));
            }
        }
        out.push(Histogram::new(weights, topology.unwrap_or(default_topology))?);
    }
    if out.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    Ok(out)
}

pub fn read_histograms(path: &Path, default_topology: Topology) -> Result<Vec<Histogram>> {
    parse_histograms(&std::fs::read_to_string(path)?, default_topology)
}

/// The first histogram of a file.
pub fn read_histogram(path: &Path, default_topology: Topology) -> Result<Histogram> {
    Ok(read_histograms(path, default_topology)?.swap_remove(0))
}

pub fn format_histograms(hists: &[Histogram]) -> String {
    let mut s = String::new();
    if let Some(h) = hists.first() {
        s.push_str(&format!("# topology={} bins={}\n", h.topology(), h.bins()));
    }
    for h in hists {
        let row: Vec<String> = h.weights().iter().map(|w| w.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn write_histograms(hists: &[Histogram], path: &Path) -> Result<()> {
    std::fs::write(path, format_histograms(hists))?;
    Ok(())
}

pub fn parse_points(text: &str) -> Result<PointMassDistribution> {
    let mut positions = Vec::new();
    let mut masses = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (p, m) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {}: expected `position,mass`", k + 1)))?;
        positions.push(parse_number(p, k + 1)?);
        masses.push(parse_number(m, k + 1)?);
    }
    PointMassDistribution::new(positions, masses)
}

pub fn read_points(path: &Path) -> Result<PointMassDistribution> {
    parse_points(&std::fs::read_to_string(path)?)
}

pub fn format_points(points: &PointMassDistribution) -> String {
    points.positions().iter().zip(points.masses()).map(|(p, m)| format!("{p},{m}\n")).collect()
}

/// `source_quantile,source_pos,target_pos` rows, one per map segment.
pub fn write_map_csv<W: Write>(map: &TransferMap, mut out: W) -> Result<()> {
    writeln!(out, "source_quantile,source_pos,target_pos")?;
    for s in map.segments() {
        writeln!(out, "{},{},{}", s.quantile_start, s.source, s.target)?;
    }
    Ok(())
}

/// `i,j,flow,cost_contrib` rows, one per nonzero flow.
pub fn write_plan_csv<W: Write>(plan: &TransportPlan, cost: impl Fn(usize, usize) -> f64, mut out: W) -> Result<()> {
    writeln!(out, "i,j,flow,cost_contrib")?;
    for &(i, j, a) in plan.entries() {
        writeln!(out, "{i},{j},{a},{}", a * cost(i, j))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_round_trip() {
        let h = Histogram::circular(vec![0.25, 0.5, 0.0, 0.25]).unwrap();
        let text = format_histograms(&[h.clone(), h.clone()]);
        assert!(text.starts_with("# topology=circular bins=4\n"));
        assert_eq!(parse_histograms(&text, Topology::Linear).unwrap(), vec![h.clone(), h]);
    }

    #[test]
    fn header_is_optional() {
        let hs = parse_histograms("0.5, 0.5\n\n1,0\n", Topology::Linear).unwrap();
        assert_eq!(hs.len(), 2);
        assert_eq!(hs[0].topology(), Topology::Linear);
    }

    #[test]
    fn malformed() {
        assert!(matches!(parse_histograms("0.5,abc", Topology::Linear), Err(Error::Format(_))));
        assert!(matches!(
            parse_histograms("# bins=3\n0.5,0.5", Topology::Linear),
            Err(Error::Format(_))
        ));
        assert!(matches!(parse_histograms("# only a comment", Topology::Linear), Err(Error::EmptyDistribution)));
        assert!(matches!(parse_points("0.1;1"), Err(Error::Format(_))));
    }

    #[test]
    fn points() {
        let p = parse_points("# position,mass\n0.1,0.3\n0.6,0.7\n").unwrap();
        assert_eq!(p.positions(), &[0.1, 0.6]);
        assert_eq!(parse_points(&format_points(&p)).unwrap(), p);
    }
}
