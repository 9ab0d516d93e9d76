//! Seeded topology generation and identifier assignment.
//!
//! Everything here is deterministic in the seeds, so generated inputs can
//! be reproduced byte for byte.

use std::collections::HashSet;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::encoding::Identifier;
use crate::topology::{Topology, TopologyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("family {family} needs at least {min} nodes, got {n}")]
    TooSmall {
        family: &'static str,
        min: usize,
        n: usize,
    },
    #[error("edge probability must be in (0, 1], got {0}")]
    BadProbability(f64),
    #[error("no connected graph found in {0} attempts; raise the probability")]
    ConnectivityRetriesExhausted(usize),
    #[error("{n} distinct identifiers of exactly {bits} bits do not exist")]
    TooManyNodesForBits { n: usize, bits: u32 },
    #[error("custom identifier list has {got} entries for {expected} nodes")]
    CustomListLength { expected: usize, got: usize },
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphFamily {
    Path,
    Ring,
    Complete,
    Star,
    /// Complete binary tree in heap layout.
    BalancedTree,
    /// Erdős–Rényi, resampled until connected.
    Gnp { p: f64 },
}

impl GraphFamily {
    pub fn name(self) -> &'static str {
        match self {
            GraphFamily::Path => "path",
            GraphFamily::Ring => "ring",
            GraphFamily::Complete => "complete",
            GraphFamily::Star => "star",
            GraphFamily::BalancedTree => "balanced-tree",
            GraphFamily::Gnp { .. } => "gnp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: GraphFamily,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdStrategy {
    /// Node index order.
    Sequential,
    /// A seeded shuffle of the sequential pool.
    RandomPermutation,
    /// The largest identifier lands on a node of maximal eccentricity and
    /// the rest fall off with distance from it, so the strongest competitor
    /// sits as far away as possible.
    AdversarialFarMax,
    Custom(Vec<Identifier>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdAssignment {
    pub strategy: IdStrategy,
    /// When set, every identifier has exactly this many binary digits.
    pub id_bits: Option<u32>,
    pub seed: u64,
}

impl IdAssignment {
    pub fn sequential() -> Self {
        IdAssignment {
            strategy: IdStrategy::Sequential,
            id_bits: None,
            seed: 0,
        }
    }
}

/// Builds the requested graph and assigns identifiers to its nodes.
pub fn generate(spec: &GeneratorSpec, ids: &IdAssignment) -> Result<Topology, GenerateError> {
    let edges = build_edges(spec)?;
    assign_ids(spec.n, edges, ids)
}

fn build_edges(spec: &GeneratorSpec) -> Result<Vec<(usize, usize)>, GenerateError> {
    let n = spec.n;
    let need = |min: usize| -> Result<(), GenerateError> {
        if n < min {
            Err(GenerateError::TooSmall {
                family: spec.family.name(),
                min,
                n,
            })
        } else {
            Ok(())
        }
    };
    match spec.family {
        GraphFamily::Path => {
            need(2)?;
            Ok((1..n).map(|i| (i - 1, i)).collect())
        }
        GraphFamily::Ring => {
            need(3)?;
            let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            edges.push((n - 1, 0));
            Ok(edges)
        }
        GraphFamily::Complete => {
            need(2)?;
            Ok((0..n)
                .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
                .collect())
        }
        GraphFamily::Star => {
            need(2)?;
            Ok((1..n).map(|i| (0, i)).collect())
        }
        GraphFamily::BalancedTree => {
            need(2)?;
            Ok((1..n).map(|i| ((i - 1) / 2, i)).collect())
        }
        GraphFamily::Gnp { p } => {
            need(2)?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(GenerateError::BadProbability(p));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
            const ATTEMPTS: usize = 100;
            for _ in 0..ATTEMPTS {
                let mut edges = Vec::new();
                for a in 0..n {
                    for b in (a + 1)..n {
                        if rng.random::<f64>() < p {
                            edges.push((a, b));
                        }
                    }
                }
                if connected(n, &edges) {
                    return Ok(edges);
                }
            }
            Err(GenerateError::ConnectivityRetriesExhausted(ATTEMPTS))
        }
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

fn assign_ids(
    n: usize,
    edges: Vec<(usize, usize)>,
    assignment: &IdAssignment,
) -> Result<Topology, GenerateError> {
    if let IdStrategy::Custom(list) = &assignment.strategy {
        if list.len() != n {
            return Err(GenerateError::CustomListLength {
                expected: n,
                got: list.len(),
            });
        }
        return Ok(Topology::new(list.clone(), edges)?);
    }

    // Ascending pool of n distinct identifiers.
    let mut rng = ChaCha20Rng::seed_from_u64(assignment.seed);
    let pool: Vec<Identifier> = match assignment.id_bits {
        None => (1..=n as u64)
            .map(|v| Identifier::from_u64(v).unwrap())
            .collect(),
        Some(bits) => sample_fixed_width_pool(n, bits, &mut rng)?,
    };

    let ids = match &assignment.strategy {
        IdStrategy::Sequential => pool,
        IdStrategy::RandomPermutation => {
            let mut ids = pool;
            ids.shuffle(&mut rng);
            ids
        }
        IdStrategy::AdversarialFarMax => {
            // Needs distances, so build the graph once with throwaway ids.
            let placeholder: Vec<Identifier> = (1..=n as u64)
                .map(|v| Identifier::from_u64(v).unwrap())
                .collect();
            let shape = Topology::new(placeholder, edges.clone())?;
            let diameter = shape.diameter();
            let far = (0..n)
                .find(|&u| shape.eccentricity(u) == diameter)
                .expect("some node attains the diameter");
            let dist = shape.distances_from(far);
            // Farthest nodes take the largest remaining identifiers.
            let mut order: Vec<usize> = (0..n).filter(|&u| u != far).collect();
            order.sort_by_key(|&u| (std::cmp::Reverse(dist[u]), u));
            let mut ids: Vec<Option<Identifier>> = vec![None; n];
            let mut pool = pool;
            ids[far] = pool.pop();
            for u in order {
                ids[u] = pool.pop();
            }
            ids.into_iter().map(Option::unwrap).collect()
        }
        IdStrategy::Custom(_) => unreachable!("handled above"),
    };

    Ok(Topology::new(ids, edges)?)
}

/// `n` distinct identifiers of exactly `bits` binary digits, ascending.
fn sample_fixed_width_pool(
    n: usize,
    bits: u32,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<Identifier>, GenerateError> {
    if bits == 0 {
        return Err(GenerateError::TooManyNodesForBits { n, bits });
    }
    if bits < 64 && n as u64 > 1u64 << (bits - 1) {
        return Err(GenerateError::TooManyNodesForBits { n, bits });
    }
    let mut seen = HashSet::with_capacity(n);
    let mut pool = Vec::with_capacity(n);
    while pool.len() < n {
        // A leading 1 followed by bits-1 random digits.
        let mut value = BigUint::from(1u8);
        let mut remaining = bits - 1;
        while remaining > 0 {
            let take = remaining.min(32);
            let chunk: u32 = rng.random();
            value = (value << take) | BigUint::from(chunk >> (32 - take));
            remaining -= take;
        }
        if seen.insert(value.clone()) {
            pool.push(Identifier::new(value).unwrap());
        }
    }
    pool.sort();
    Ok(pool)
}
