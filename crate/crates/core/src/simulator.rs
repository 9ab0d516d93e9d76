//! Lock-step execution of a node population over a static topology.
//!
//! Every round reads only the previous round's states: all nodes act on the
//! same snapshot, all messages are delivered, all mirrors are updated, and
//! only then does the next round begin. The run ends at quiescence — a full
//! round in which no node changes any variable — or when the round budget
//! is exhausted, which is reported as a timeout rather than an error so the
//! partial trace can still be inspected.

use thiserror::Error;

use crate::protocol::{NodeState, Port, ProtocolError, Role, SpreadSignal, TreeStatus};
use crate::topology::Topology;
use crate::trace::{
    DirectedMessage, NodeSnapshot, Outcome, RoundRecord, RoundTrace, TraceGranularity,
    TraceSummary,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("round {round}: {source}")]
    Protocol {
        round: u32,
        #[source]
        source: ProtocolError,
    },
    #[error("round {round}: invariant violated: {message}")]
    Invariant { round: u32, message: String },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// How much checking the simulator performs while running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssertionLevel {
    Off,
    /// Mirror coherence, role/parent consistency, monotonicity.
    #[default]
    PerRound,
    /// Everything above plus the neighbour-form catalogue, parent-forest
    /// acyclicity, and the max-identifier node's immunity to every
    /// neighbour-driven rule.
    Full,
}

impl AssertionLevel {
    pub fn name(self) -> &'static str {
        match self {
            AssertionLevel::Off => "off",
            AssertionLevel::PerRound => "per-round",
            AssertionLevel::Full => "full",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "off" => Some(AssertionLevel::Off),
            "per-round" => Some(AssertionLevel::PerRound),
            "full" => Some(AssertionLevel::Full),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub max_rounds: u32,
    pub assertion_level: AssertionLevel,
    pub trace_granularity: TraceGranularity,
}

impl SimConfig {
    /// Default budget: the election bound plus generous settling slack, so
    /// that hitting it always indicates a bug rather than a slow run.
    pub fn for_topology(topology: &Topology) -> Self {
        SimConfig {
            max_rounds: default_max_rounds(topology),
            assertion_level: AssertionLevel::PerRound,
            trace_granularity: TraceGranularity::PerRound,
        }
    }
}

/// `|alpha(max id)| + 7D` — the number of rounds within which the maximum
/// identifier's owner declares itself elected.
pub fn election_bound(topology: &Topology) -> u32 {
    let alpha_len = topology.id(topology.max_id_node()).encoded_len() as u32;
    alpha_len + 7 * topology.diameter()
}

/// `|alpha(max id)| + 6D` — the number of rounds within which every word
/// equals the maximum identifier's encoding.
pub fn spreading_bound(topology: &Topology) -> u32 {
    let alpha_len = topology.id(topology.max_id_node()).encoded_len() as u32;
    alpha_len + 6 * topology.diameter()
}

/// Election bound plus `8D + 8` rounds of slack for quiescence settling.
pub fn default_max_rounds(topology: &Topology) -> u32 {
    election_bound(topology) + 8 * topology.diameter() + 8
}

/// Fresh protocol states for every node of the topology.
pub fn initial_states(topology: &Topology) -> Vec<NodeState> {
    (0..topology.node_count())
        .map(|u| {
            NodeState::init(topology.id(u).clone(), topology.degree(u))
                .expect("validated topology has no isolated nodes")
        })
        .collect()
}

/// Executes one synchronous round: every node acts on the snapshot, then
/// every message is delivered and ingested. Returns the end-of-round states
/// and the message sent on every directed edge.
pub fn step_round(
    topology: &Topology,
    states: &[NodeState],
) -> Result<(Vec<NodeState>, Vec<DirectedMessage>), ProtocolError> {
    let stepped: Vec<_> = states.iter().map(NodeState::apply_round).collect();

    let mut messages = Vec::with_capacity(2 * topology.edge_count());
    for (u, (_, outgoing)) in stepped.iter().enumerate() {
        for (k, &message) in outgoing.iter().enumerate() {
            messages.push(DirectedMessage {
                from: u,
                to: topology.neighbor_at(u, Port::from_index(k)),
                message,
            });
        }
    }

    let mut next = Vec::with_capacity(states.len());
    for (u, (mid, _)) in stepped.iter().enumerate() {
        let incoming: Vec<_> = (0..topology.degree(u))
            .map(|k| {
                let port = Port::from_index(k);
                let v = topology.neighbor_at(u, port);
                let back = topology.reverse_port(u, port);
                stepped[v].1[back.index()]
            })
            .collect();
        next.push(mid.ingest_messages(&incoming)?);
    }
    Ok((next, messages))
}

/// Runs the protocol to quiescence or to the round budget, recording a
/// trace. Identical inputs produce identical traces.
pub fn run(topology: &Topology, config: &SimConfig) -> Result<RoundTrace, SimError> {
    if config.max_rounds == 0 {
        return Err(SimError::BadConfig("max_rounds must be at least 1".into()));
    }

    let mut states = initial_states(topology);
    let mut rounds = vec![RoundRecord {
        round: 0,
        nodes: states.iter().map(NodeSnapshot::of).collect(),
        messages: Vec::new(),
    }];

    let mut rounds_to_election = None;
    let mut elected_node = None;
    let mut rounds_to_quiescence = None;
    let mut outcome = Outcome::Timeout;
    let mut last_round = 0;

    for round in 1..=config.max_rounds {
        let (next, messages) =
            step_round(topology, &states).map_err(|source| SimError::Protocol { round, source })?;

        check_invariants(topology, &states, &next, round, config.assertion_level)?;

        if rounds_to_election.is_none() {
            if let Some(u) = (0..next.len()).find(|&u| next[u].elected()) {
                rounds_to_election = Some(round);
                elected_node = Some(u);
            }
        }

        if config.trace_granularity == TraceGranularity::PerRound {
            rounds.push(RoundRecord {
                round,
                nodes: next.iter().map(NodeSnapshot::of).collect(),
                messages,
            });
        }
        last_round = round;

        let quiescent = next == states;
        states = next;
        if quiescent {
            rounds_to_quiescence = Some(round - 1);
            outcome = Outcome::Completed;
            break;
        }
    }

    if config.trace_granularity == TraceGranularity::FinalOnly && last_round > 0 {
        rounds.push(RoundRecord {
            round: last_round,
            nodes: states.iter().map(NodeSnapshot::of).collect(),
            messages: Vec::new(),
        });
    }

    let max_node = topology.max_id_node();
    Ok(RoundTrace {
        topology: topology.clone(),
        granularity: config.trace_granularity,
        rounds,
        summary: TraceSummary {
            outcome,
            elected_node,
            elected_id: elected_node.map(|u| topology.id(u).clone()),
            rounds_to_election,
            rounds_to_quiescence,
            diameter: topology.diameter(),
            alpha_len: topology.id(max_node).encoded_len(),
        },
    })
}

fn invariant(round: u32, message: String) -> SimError {
    SimError::Invariant { round, message }
}

fn check_invariants(
    topology: &Topology,
    prev: &[NodeState],
    next: &[NodeState],
    round: u32,
    level: AssertionLevel,
) -> Result<(), SimError> {
    if level == AssertionLevel::Off {
        return Ok(());
    }

    for (u, state) in next.iter().enumerate() {
        // Mirrors must equal the neighbour's actual end-of-round state.
        for (port, mirror) in state.mirrors() {
            let v = topology.neighbor_at(u, port);
            if mirror.z() != next[v].z() {
                return Err(invariant(
                    round,
                    format!(
                        "node {u} mirror of node {v} is {} but the neighbour holds {}",
                        mirror.z(),
                        next[v].z()
                    ),
                ));
            }
            if mirror.term() != next[v].term() {
                return Err(invariant(
                    round,
                    format!("node {u} term mirror of node {v} is stale"),
                ));
            }
            // Child marking on one side must match parent choice on the other.
            let v_parents_u =
                next[v].parent_port() == Some(topology.reverse_port(u, port));
            if (mirror.status() == TreeStatus::Child) != v_parents_u {
                return Err(invariant(
                    round,
                    format!("node {u} child marking of node {v} disagrees with its parent choice"),
                ));
            }
        }

        if (state.role() == Role::Active) != state.parent_port().is_none() {
            return Err(invariant(
                round,
                format!("node {u} role and parent presence disagree"),
            ));
        }
        if prev[u].role() == Role::Follower && state.role() == Role::Active {
            return Err(invariant(round, format!("node {u} reverted to active")));
        }
        if prev[u].elected() && !state.elected() {
            return Err(invariant(round, format!("node {u} lost its election")));
        }
    }

    if level == AssertionLevel::Full {
        for &(u, v) in topology.edges() {
            let deleted = |s: &NodeState| s.last_action().is_delete();
            if !crate::oracle::pair_matches_form(
                next[u].z(),
                next[v].z(),
                deleted(&next[u]),
                deleted(&next[v]),
            ) {
                return Err(invariant(
                    round,
                    format!(
                        "edge {u}-{v}: words {} and {} match no neighbour form",
                        next[u].z(),
                        next[v].z()
                    ),
                ));
            }
        }

        // Parent pointers must stay a forest.
        let parent: Vec<Option<usize>> = (0..next.len())
            .map(|u| next[u].parent_port().map(|p| topology.neighbor_at(u, p)))
            .collect();
        if let Some(cycle_node) = crate::oracle::functional_cycle(&parent) {
            return Err(invariant(
                round,
                format!("parent pointers form a cycle through node {cycle_node}"),
            ));
        }

        // The top identifier's node is never driven by a neighbour.
        let m = topology.max_id_node();
        if next[m].role() != Role::Active {
            return Err(invariant(round, format!("max-id node {m} became follower")));
        }
        if !matches!(
            next[m].last_action(),
            SpreadSignal::Null | SpreadSignal::Append0 | SpreadSignal::Append1
        ) {
            return Err(invariant(
                round,
                format!(
                    "max-id node {m} performed {}",
                    next[m].last_action().name()
                ),
            ));
        }
    }

    Ok(())
}
