//! Scaling sweeps.
//!
//! Two axes isolate the two additive terms of the round complexity: growing
//! identifier width on a fixed complete graph (diameter 1) exposes the
//! encoded-length term, and growing paths at fixed identifier width expose
//! the diameter term. Rows report raw synchronous rounds; every message
//! carries six bits, so bit-round figures are a constant factor away.

use std::fmt::Write as _;

use thiserror::Error;

use crate::generate::{generate, GenerateError, GeneratorSpec, GraphFamily, IdAssignment, IdStrategy};
use crate::simulator::{election_bound, run, AssertionLevel, SimConfig, SimError};
use crate::trace::{Outcome, TraceGranularity};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{family} n={n} id_bits={id_bits} trial {trial}: timed out past the round budget")]
    Timeout {
        family: &'static str,
        n: usize,
        id_bits: u32,
        trial: u32,
    },
    #[error("sweep values must be non-empty")]
    NoValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Paths of growing length at fixed identifier width.
    Diameter,
    /// Complete graphs of fixed size with growing identifier width.
    IdBits,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Diameter => "diameter",
            SweepAxis::IdBits => "id-bits",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "diameter" => Some(SweepAxis::Diameter),
            "id-bits" => Some(SweepAxis::IdBits),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    /// Node counts (diameter axis) or identifier widths (id-bits axis).
    pub values: Vec<u64>,
    pub repetitions: u32,
    pub seed: u64,
    /// Graph size on the id-bits axis.
    pub nodes: usize,
    /// Identifier width on the diameter axis.
    pub id_bits: u32,
}

impl SweepConfig {
    pub fn new(axis: SweepAxis, values: Vec<u64>) -> Self {
        SweepConfig {
            axis,
            values,
            repetitions: 3,
            seed: 0,
            nodes: 8,
            id_bits: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub family: &'static str,
    pub n: usize,
    pub m: usize,
    pub diameter: u32,
    pub id_bits: u32,
    pub trial: u32,
    pub rounds_election: u32,
    pub rounds_quiescent: u32,
    pub bound: u32,
}

impl SweepRow {
    pub fn margin(&self) -> i64 {
        i64::from(self.bound) - i64::from(self.rounds_election)
    }
}

pub const CSV_HEADER: &str =
    "family,n,m,D,id_bits,trial,rounds_election,rounds_quiescent,bound,margin";

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.family,
            r.n,
            r.m,
            r.diameter,
            r.id_bits,
            r.trial,
            r.rounds_election,
            r.rounds_quiescent,
            r.bound,
            r.margin()
        )
        .unwrap();
    }
    out
}

/// Runs the sweep; rows are ordered by axis value, then trial.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, SweepError> {
    if config.values.is_empty() {
        return Err(SweepError::NoValues);
    }
    let mut rows = Vec::with_capacity(config.values.len() * config.repetitions as usize);
    for &value in &config.values {
        for trial in 0..config.repetitions {
            let (family, n, id_bits) = match config.axis {
                SweepAxis::Diameter => (GraphFamily::Path, value as usize, config.id_bits),
                SweepAxis::IdBits => (GraphFamily::Complete, config.nodes, value as u32),
            };
            let seed = mix(config.seed, value, u64::from(trial));
            let topology = generate(
                &GeneratorSpec {
                    family,
                    n,
                    seed,
                },
                &IdAssignment {
                    strategy: IdStrategy::RandomPermutation,
                    id_bits: Some(id_bits),
                    seed: mix(seed, 0x1d5, u64::from(trial)),
                },
            )?;
            let sim = SimConfig {
                assertion_level: AssertionLevel::Off,
                trace_granularity: TraceGranularity::FinalOnly,
                ..SimConfig::for_topology(&topology)
            };
            let trace = run(&topology, &sim)?;
            if trace.summary.outcome == Outcome::Timeout {
                return Err(SweepError::Timeout {
                    family: family.name(),
                    n,
                    id_bits,
                    trial,
                });
            }
            rows.push(SweepRow {
                family: family.name(),
                n,
                m: topology.edge_count(),
                diameter: trace.summary.diameter,
                id_bits,
                trial,
                rounds_election: trace
                    .summary
                    .rounds_to_election
                    .expect("completed runs elect"),
                rounds_quiescent: trace
                    .summary
                    .rounds_to_quiescence
                    .expect("completed runs go quiet"),
                bound: election_bound(&topology),
            });
        }
    }
    Ok(rows)
}

/// Ordinary least-squares slope of y against x; `None` when x is constant.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.is_empty() {
        return None;
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    Some(sxy / sxx)
}

fn mix(a: u64, b: u64, c: u64) -> u64 {
    // splitmix64 over the packed inputs
    let mut z = a
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(b.rotate_left(17))
        .wrapping_add(c.rotate_left(43));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_bits_axis_rows_are_complete_graphs() {
        let config = SweepConfig {
            repetitions: 2,
            ..SweepConfig::new(SweepAxis::IdBits, vec![4, 8])
        };
        let rows = run_sweep(&config).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert_eq!(row.family, "complete");
            assert_eq!(row.n, 8);
            assert_eq!(row.diameter, 1);
            assert!(row.rounds_election <= row.bound);
        }
        assert_eq!(rows[0].id_bits, 4);
        assert_eq!(rows[3].id_bits, 8);
    }

    #[test]
    fn diameter_axis_rows_are_paths() {
        let config = SweepConfig {
            repetitions: 1,
            ..SweepConfig::new(SweepAxis::Diameter, vec![4, 8])
        };
        let rows = run_sweep(&config).unwrap();
        for row in &rows {
            assert_eq!(row.family, "path");
            assert_eq!(row.diameter as usize, row.n - 1);
            assert_eq!(row.id_bits, 16);
            assert!(row.rounds_election <= row.bound);
        }
    }

    #[test]
    fn sweeps_are_deterministic() {
        let config = SweepConfig::new(SweepAxis::IdBits, vec![4, 16]);
        let a = run_sweep(&config).unwrap();
        let b = run_sweep(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(to_csv(&a), to_csv(&b));
    }

    #[test]
    fn csv_shape() {
        let config = SweepConfig {
            repetitions: 1,
            ..SweepConfig::new(SweepAxis::IdBits, vec![4])
        };
        let rows = run_sweep(&config).unwrap();
        let csv = to_csv(&rows);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(fields[0], "complete");
    }

    #[test]
    fn slope_fits_a_line() {
        let points: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 + 1.0)).collect();
        let slope = least_squares_slope(&points).unwrap();
        assert!((slope - 3.0).abs() < 1e-9);
        assert_eq!(least_squares_slope(&[(1.0, 2.0), (1.0, 5.0)]), None);
    }
}
