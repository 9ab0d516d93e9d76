//! Trace verification with global knowledge.
//!
//! The checks here consume a recorded trace plus its topology and verify,
//! from the outside, everything the protocol is supposed to guarantee:
//! convergence of every word to the maximum identifier's encoding within
//! its round bound, uniqueness and correctness of the election, the shape
//! of the parent graph at every round, the bounded divergence catalogue for
//! neighbouring words, the discipline of delete runs, and bit-exact
//! replayability of the trace itself.
//!
//! [`brute_force_reference`] computes the expected outcome of a run without
//! touching the protocol at all — maximum by integer order, diameter by
//! breadth-first search, bounds by arithmetic — and serves as the yardstick
//! for every other check.

use std::fmt;

use crate::encoding::{self, BitWord, Identifier};
use crate::protocol::{Role, SpreadSignal};
use crate::simulator;
use crate::topology::Topology;
use crate::trace::{NodeSnapshot, Outcome, RoundTrace, TraceGranularity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The trace lacks the per-round data this check needs.
    Skipped,
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReport {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

impl CheckReport {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        CheckReport {
            name,
            status: CheckStatus::Pass,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        CheckReport {
            name,
            status: CheckStatus::Fail,
            detail: detail.into(),
        }
    }

    fn skipped(name: &'static str, detail: impl Into<String>) -> Self {
        CheckReport {
            name,
            status: CheckStatus::Skipped,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skipped",
        };
        write!(f, "{}: {} ({})", self.name, status, self.detail)
    }
}

/// Expected results of a run, computed without running the protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceOutcome {
    pub elected_node: usize,
    pub elected_id: Identifier,
    pub diameter: u32,
    pub alpha_len: usize,
    /// Rounds within which every word equals the winner's encoding.
    pub spreading_bound: u32,
    /// Rounds within which the winner declares itself elected.
    pub election_bound: u32,
}

/// The yardstick: maximum by integer order, diameter by BFS, bounds by
/// arithmetic on the identifier's bit length.
pub fn brute_force_reference(topology: &Topology) -> ReferenceOutcome {
    let elected_node = topology.max_id_node();
    let elected_id = topology.id(elected_node).clone();
    let alpha_len = 2 * elected_id.bit_len() + 1;
    let diameter = topology.diameter();
    ReferenceOutcome {
        elected_node,
        elected_id,
        diameter,
        alpha_len,
        spreading_bound: alpha_len as u32 + 6 * diameter,
        election_bound: alpha_len as u32 + 7 * diameter,
    }
}

/// Runs every check and returns one report per check.
pub fn run_all(trace: &RoundTrace, topology: &Topology) -> Vec<CheckReport> {
    vec![
        check_spreading_convergence(trace, topology),
        check_election(trace, topology),
        check_spanning_tree(trace, topology),
        check_neighbor_forms(trace, topology),
        check_action_sequences(trace),
        check_replay(trace),
    ]
}

/// Every word must equal the winner's encoding from the spreading bound
/// onwards, and no word may ever move away from it once reached.
pub fn check_spreading_convergence(trace: &RoundTrace, topology: &Topology) -> CheckReport {
    const NAME: &str = "spreading-convergence";
    if trace.summary.outcome == Outcome::Timeout {
        return CheckReport::fail(NAME, "timeout trace: round budget exhausted");
    }
    let reference = brute_force_reference(topology);
    let target = encoding::encode_alpha(&reference.elected_id);
    let bound = reference.spreading_bound;

    let mut reached: Vec<Option<u32>> = vec![None; topology.node_count()];
    let mut all_converged_at = None;
    for record in &trace.rounds {
        for (u, node) in record.nodes.iter().enumerate() {
            if node.z == target {
                reached[u].get_or_insert(record.round);
            } else {
                if let Some(first) = reached[u] {
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "node {u} held the target word at round {first} but drifted to {} \
                             at round {}",
                            node.z, record.round
                        ),
                    );
                }
                if record.round >= bound {
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "round {} node {u}: word {} != target {} past bound {bound}",
                            record.round, node.z, target
                        ),
                    );
                }
            }
        }
        if all_converged_at.is_none() && record.nodes.iter().all(|n| n.z == target) {
            all_converged_at = Some(record.round);
        }
    }
    if let Some(bad) = trace
        .final_round()
        .nodes
        .iter()
        .position(|n| n.z != target)
    {
        return CheckReport::fail(
            NAME,
            format!("final state of node {bad} is not the target word"),
        );
    }
    match all_converged_at {
        Some(round) => CheckReport::pass(
            NAME,
            format!("all words equal alpha(max) from round {round}; bound {bound}"),
        ),
        None => CheckReport::fail(NAME, "no recorded round has all words converged"),
    }
}

/// Exactly one node may ever become elected: the maximum identifier's
/// owner, within its round bound. No other node may ever satisfy the
/// election predicate, evaluated here with global knowledge.
pub fn check_election(trace: &RoundTrace, topology: &Topology) -> CheckReport {
    const NAME: &str = "election";
    if trace.summary.outcome == Outcome::Timeout {
        return CheckReport::fail(NAME, "timeout trace: round budget exhausted");
    }
    let reference = brute_force_reference(topology);

    let mut first_elected: Option<(u32, usize)> = None;
    let mut elected_nodes: Vec<usize> = Vec::new();
    let mut was_elected = vec![false; topology.node_count()];
    for record in &trace.rounds {
        for (u, node) in record.nodes.iter().enumerate() {
            if was_elected[u] && !node.elected {
                return CheckReport::fail(
                    NAME,
                    format!("node {u} lost its elected flag at round {}", record.round),
                );
            }
            if node.elected && !was_elected[u] {
                was_elected[u] = true;
                elected_nodes.push(u);
                if first_elected.is_none() {
                    first_elected = Some((record.round, u));
                }
            }
        }
    }

    let Some((first_recorded, winner)) = first_elected else {
        return CheckReport::fail(NAME, "no node ever became elected");
    };
    if elected_nodes.len() != 1 {
        return CheckReport::fail(
            NAME,
            format!("{} distinct nodes became elected: {elected_nodes:?}", elected_nodes.len()),
        );
    }
    if winner != reference.elected_node {
        return CheckReport::fail(
            NAME,
            format!(
                "node {winner} was elected but node {} holds the maximum identifier {}",
                reference.elected_node, reference.elected_id
            ),
        );
    }
    if trace.summary.elected_node != Some(winner) {
        return CheckReport::fail(NAME, "summary names a different winner than the records");
    }
    // With per-round data the first flagged round is the election round and
    // must agree with the summary; a final-only trace only pins it down
    // through the summary.
    let round = if trace.granularity == TraceGranularity::PerRound {
        if trace.summary.rounds_to_election != Some(first_recorded) {
            return CheckReport::fail(NAME, "summary disagrees with the recorded rounds");
        }
        first_recorded
    } else {
        match trace.summary.rounds_to_election {
            Some(round) => round,
            None => return CheckReport::fail(NAME, "summary lacks the election round"),
        }
    };
    if round > reference.election_bound {
        return CheckReport::fail(
            NAME,
            format!(
                "election at round {round} exceeds the bound {}",
                reference.election_bound
            ),
        );
    }

    // With per-round data, evaluate the election predicate for every node at
    // every round: only the maximum's owner may ever satisfy it.
    if trace.granularity == TraceGranularity::PerRound {
        let encoded: Vec<BitWord> = topology.ids().iter().map(encoding::encode_alpha).collect();
        for pair in trace.rounds.windows(2) {
            let (prev, cur) = (&pair[0], &pair[1]);
            for (u, node) in cur.nodes.iter().enumerate() {
                let satisfied = node.role == Role::Active
                    && node.z == encoded[u]
                    && topology.neighbors(u).iter().all(|&v| {
                        prev.nodes[v].z == node.z && prev.nodes[v].term
                    });
                if satisfied && u != reference.elected_node {
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "node {u} satisfied the election predicate at round {} without \
                             holding the maximum",
                            cur.round
                        ),
                    );
                }
                if u == winner && cur.round == round && !satisfied {
                    return CheckReport::fail(
                        NAME,
                        format!("winner's elected flag at round {round} has no predicate support"),
                    );
                }
            }
        }
    }

    CheckReport::pass(
        NAME,
        format!(
            "unique winner node {winner} (id {}) at round {round}; bound {}",
            reference.elected_id, reference.election_bound
        ),
    )
}

/// The parent pointers must form a forest rooted at the active nodes at
/// every round, and a spanning tree rooted at the winner at the end.
pub fn check_spanning_tree(trace: &RoundTrace, topology: &Topology) -> CheckReport {
    const NAME: &str = "spanning-tree";
    if trace.summary.outcome == Outcome::Timeout {
        return CheckReport::fail(NAME, "timeout trace: round budget exhausted");
    }
    let n = topology.node_count();
    let reference = brute_force_reference(topology);

    for record in &trace.rounds {
        let mut parent = vec![None; n];
        for (u, node) in record.nodes.iter().enumerate() {
            if let Some(port) = node.parent_port {
                if port.index() >= topology.degree(u) {
                    return CheckReport::fail(
                        NAME,
                        format!("round {}: node {u} names port {port} beyond its degree", record.round),
                    );
                }
                parent[u] = Some(topology.neighbor_at(u, port));
            }
            let active = node.role == Role::Active;
            if active != parent[u].is_none() {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "round {}: node {u} is {} but {} a parent",
                        record.round,
                        node.role.name(),
                        if parent[u].is_none() { "lacks" } else { "has" },
                    ),
                );
            }
        }
        if let Some(u) = functional_cycle(&parent) {
            return CheckReport::fail(
                NAME,
                format!("round {}: parent pointers cycle through node {u}", record.round),
            );
        }
    }

    let last = trace.final_round();
    let active: Vec<usize> = (0..n).filter(|&u| last.nodes[u].role == Role::Active).collect();
    if active != [reference.elected_node] {
        return CheckReport::fail(
            NAME,
            format!(
                "final active set {active:?} is not exactly the maximum's node {}",
                reference.elected_node
            ),
        );
    }
    let edge_count = last.nodes.iter().filter(|s| s.parent_port.is_some()).count();
    if edge_count != n - 1 {
        return CheckReport::fail(
            NAME,
            format!("final parent graph has {edge_count} edges, expected {}", n - 1),
        );
    }

    CheckReport::pass(
        NAME,
        format!(
            "forest at every round; final tree spans {n} nodes rooted at node {}",
            reference.elected_node
        ),
    )
}

/// Two neighbouring words must always be within the bounded divergence
/// catalogue: equal; prefix within two letters; split after a common stem
/// with tails of one and at most three letters; or prefix within three to
/// six letters while the short side is mid-delete.
pub fn check_neighbor_forms(trace: &RoundTrace, topology: &Topology) -> CheckReport {
    const NAME: &str = "neighbor-forms";
    if trace.granularity != TraceGranularity::PerRound {
        return CheckReport::skipped(NAME, "needs a per-round trace");
    }

    let mut max_gap = 0usize;
    for record in &trace.rounds {
        for &(u, v) in topology.edges() {
            let (a, b) = (&record.nodes[u], &record.nodes[v]);
            if !pair_matches_form(
                &a.z,
                &b.z,
                a.last_action.is_delete(),
                b.last_action.is_delete(),
            ) {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "round {}: edge {u}-{v} with words {} and {} matches no form",
                        record.round, a.z, b.z
                    ),
                );
            }
            max_gap = max_gap.max(prefix_gap(&a.z, &b.z));

            // A split pair must have a bare 1-tail and a 0-tail of at most
            // three letters; this is what licenses the bounded deletes.
            for (x, y, xi, yi) in [(&a.z, &b.z, u, v), (&b.z, &a.z, v, u)] {
                let c = x.common_prefix_len(y);
                if x.len() > c + 1 && !x.bit(c) && y.len() > c && y.bit(c) {
                    if y.len() != c + 1 || x.len() - c - 1 > 3 {
                        return CheckReport::fail(
                            NAME,
                            format!(
                                "round {}: divergent pair {xi}-{yi} ({x} vs {y}) breaks the \
                                 split-tail bounds",
                                record.round
                            ),
                        );
                    }
                }
            }
        }
    }
    CheckReport::pass(
        NAME,
        format!(
            "{} rounds x {} edges within the catalogue; widest prefix gap {max_gap}",
            trace.rounds.len(),
            topology.edge_count()
        ),
    )
}

/// Largest length difference over prefix-related pairs, for reporting.
fn prefix_gap(a: &BitWord, b: &BitWord) -> usize {
    let c = a.common_prefix_len(b);
    if c == a.len().min(b.len()) {
        a.len().abs_diff(b.len())
    } else {
        0
    }
}

/// The bounded divergence catalogue for one edge, tried in both directions.
pub fn pair_matches_form(a: &BitWord, b: &BitWord, a_deleted: bool, b_deleted: bool) -> bool {
    let c = a.common_prefix_len(b);
    if c == a.len().min(b.len()) {
        // One word is a prefix of the other.
        let gap = a.len().abs_diff(b.len());
        let short_deleted = if a.len() <= b.len() { a_deleted } else { b_deleted };
        gap <= 2 || (gap <= 6 && short_deleted)
    } else {
        // The words split after a common stem.
        let (zero_side, one_side) = if a.bit(c) { (b, a) } else { (a, b) };
        let zero_tail = zero_side.len() - c - 1;
        let one_tail = one_side.len() - c - 1;
        (zero_tail == 0 && one_tail == 1) || (one_tail == 0 && zero_tail <= 3)
    }
}

/// A delete is always followed by another delete or a change, so every
/// delete run ends in a change; and the maximum identifier's node is never
/// driven by any neighbour rule.
pub fn check_action_sequences(trace: &RoundTrace) -> CheckReport {
    const NAME: &str = "action-sequences";
    if trace.granularity != TraceGranularity::PerRound {
        return CheckReport::skipped(NAME, "needs a per-round trace");
    }
    let topology = &trace.topology;
    let n = topology.node_count();

    for u in 0..n {
        for pair in trace.rounds.windows(2) {
            let (cur, nxt) = (&pair[0], &pair[1]);
            if cur.round == 0 {
                continue;
            }
            let action = cur.nodes[u].last_action;
            let follow = nxt.nodes[u].last_action;
            if action.is_delete() && !(follow.is_delete() || follow == SpreadSignal::Change) {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "node {u}: {} at round {} followed by {} at round {}",
                        action.name(),
                        cur.round,
                        follow.name(),
                        nxt.round
                    ),
                );
            }
        }
        if let Some(last) = trace.rounds.last() {
            if last.nodes[u].last_action.is_delete() {
                return CheckReport::fail(
                    NAME,
                    format!("node {u}: trace ends on an unresolved delete"),
                );
            }
        }
    }

    // The maximum's node: only own appends and nulls, never a state that
    // would let any neighbour-driven rule fire.
    let m = topology.max_id_node();
    let y = encoding::encode_alpha(topology.id(m));
    for pair in trace.rounds.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let action = cur.nodes[m].last_action;
        if !matches!(
            action,
            SpreadSignal::Null | SpreadSignal::Append0 | SpreadSignal::Append1
        ) {
            return CheckReport::fail(
                NAME,
                format!(
                    "max-id node {m} performed {} at round {}",
                    action.name(),
                    cur.round
                ),
            );
        }
        if !cur.nodes[m].z.is_prefix_of(&y) {
            return CheckReport::fail(
                NAME,
                format!("max-id node {m} left its own word at round {}", cur.round),
            );
        }
        for &v in topology.neighbors(m) {
            let zm = &prev.nodes[m].z;
            let zv = &prev.nodes[v].z;
            if zv.is_proper_prefix_of(zm) && prev.nodes[v].last_action.is_delete() {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "round {}: a delete trigger existed against max-id node {m}",
                        cur.round
                    ),
                );
            }
            let c = zm.common_prefix_len(zv);
            if zm.len() > c && zv.len() > c && !zm.bit(c) && zv.bit(c) {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "round {}: max-id node {m} sat on the low side of a split against node {v}",
                        cur.round
                    ),
                );
            }
            if zm.is_proper_prefix_of(zv) {
                return CheckReport::fail(
                    NAME,
                    format!(
                        "round {}: node {v} held a strict extension of max-id node {m}'s word",
                        cur.round
                    ),
                );
            }
        }
    }

    CheckReport::pass(
        NAME,
        format!(
            "delete discipline over {} rounds; max-id node untouched by neighbour rules",
            trace.rounds.len()
        ),
    )
}

/// Re-executes the run and compares states and messages round by round.
pub fn check_replay(trace: &RoundTrace) -> CheckReport {
    const NAME: &str = "trace-replay";
    if trace.granularity != TraceGranularity::PerRound {
        return CheckReport::skipped(NAME, "needs a per-round trace");
    }
    let topology = &trace.topology;
    let mut states = simulator::initial_states(topology);

    let initial: Vec<NodeSnapshot> = states.iter().map(NodeSnapshot::of).collect();
    if initial != trace.rounds[0].nodes {
        return CheckReport::fail(NAME, "round 0 does not match freshly initialised nodes");
    }

    for record in &trace.rounds[1..] {
        let (_, computed) = match simulator::step_round(topology, &states) {
            Ok(result) => result,
            Err(err) => {
                return CheckReport::fail(
                    NAME,
                    format!("round {}: replay failed: {err}", record.round),
                )
            }
        };
        // Edge order in a trace is not semantic; compare by directed edge.
        let key = |m: &crate::trace::DirectedMessage| (m.from, m.to);
        let mut computed = computed;
        let mut recorded = record.messages.clone();
        computed.sort_unstable_by_key(key);
        recorded.sort_unstable_by_key(key);
        if let Some((bad, _)) = computed
            .iter()
            .zip(&recorded)
            .find(|(a, b)| a != b)
            .map(|(a, b)| (a.clone(), b))
        {
            return CheckReport::fail(
                NAME,
                format!(
                    "round {}: recomputed message on edge {}->{} disagrees with the record",
                    record.round, bad.from, bad.to
                ),
            );
        }

        // Feed the recorded messages (not the recomputed ones) back in.
        let mid: Vec<_> = states.iter().map(|s| s.apply_round().0).collect();
        let mut rebuilt = Vec::with_capacity(mid.len());
        for (u, state) in mid.iter().enumerate() {
            let incoming: Vec<_> = topology
                .neighbors(u)
                .iter()
                .map(|&v| {
                    recorded[recorded
                        .binary_search_by_key(&(v, u), key)
                        .expect("validated trace has one message per directed edge")]
                    .message
                })
                .collect();
            match state.ingest_messages(&incoming) {
                Ok(s) => rebuilt.push(s),
                Err(err) => {
                    return CheckReport::fail(
                        NAME,
                        format!(
                            "round {}: node {u} cannot ingest recorded messages: {err}",
                            record.round
                        ),
                    )
                }
            }
        }

        let snapshots: Vec<NodeSnapshot> = rebuilt.iter().map(NodeSnapshot::of).collect();
        if snapshots != record.nodes {
            let node = snapshots
                .iter()
                .zip(&record.nodes)
                .position(|(a, b)| a != b)
                .unwrap_or(0);
            return CheckReport::fail(
                NAME,
                format!(
                    "round {}: node {node} diverges from the recorded state",
                    record.round
                ),
            );
        }
        states = rebuilt;
    }
    CheckReport::pass(
        NAME,
        format!("{} rounds re-executed bit-identically", trace.rounds.len() - 1),
    )
}

/// Cycle detection on a functional graph given as parent indices.
pub(crate) fn functional_cycle(parent: &[Option<usize>]) -> Option<usize> {
    let mut mark = vec![0u8; parent.len()];
    for start in 0..parent.len() {
        if mark[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut u = start;
        loop {
            match mark[u] {
                1 => return Some(u),
                2 => break,
                _ => {
                    mark[u] = 1;
                    path.push(u);
                    match parent[u] {
                        Some(p) => u = p,
                        None => break,
                    }
                }
            }
        }
        for w in path {
            mark[w] = 2;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Port;
    use crate::simulator::{run, AssertionLevel, SimConfig};

    fn ids(values: &[u64]) -> Vec<Identifier> {
        values
            .iter()
            .map(|&v| Identifier::from_u64(v).unwrap())
            .collect()
    }

    fn run_full(topology: &Topology) -> RoundTrace {
        let config = SimConfig {
            assertion_level: AssertionLevel::Full,
            ..SimConfig::for_topology(topology)
        };
        run(topology, &config).unwrap()
    }

    fn assert_all_pass(trace: &RoundTrace, topology: &Topology) {
        for report in run_all(trace, topology) {
            assert!(report.passed(), "{report}");
            assert_eq!(report.status, CheckStatus::Pass, "{report}");
        }
    }

    #[test]
    fn reference_outcomes() {
        let p2 = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let r = brute_force_reference(&p2);
        assert_eq!(r.elected_node, 1);
        assert_eq!(r.diameter, 1);
        assert_eq!((r.spreading_bound, r.election_bound), (11, 12));

        let ring = Topology::new(
            ids(&[3, 1, 4, 5, 2]),
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
        )
        .unwrap();
        let r = brute_force_reference(&ring);
        assert_eq!(r.elected_id.to_string(), "5");
        assert_eq!(r.diameter, 2);
        assert_eq!((r.spreading_bound, r.election_bound), (19, 21));

        let k4 = Topology::new(
            ids(&[1, 2, 3, 4]),
            vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let r = brute_force_reference(&k4);
        assert_eq!(r.elected_id.to_string(), "4");
        assert_eq!(r.diameter, 1);
    }

    #[test]
    fn clean_runs_pass_all_checks() {
        let topologies = [
            Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap(),
            Topology::new(
                ids(&[1, 2, 3, 4]),
                vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            )
            .unwrap(),
            Topology::new(
                ids(&[3, 1, 4, 5, 2]),
                vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
            )
            .unwrap(),
            // Ids descending from the far end: maximal interference.
            Topology::new(
                ids(&[16, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]),
                (1..16).map(|i| (i - 1, i)).collect(),
            )
            .unwrap(),
        ];
        for topology in &topologies {
            let trace = run_full(topology);
            assert_all_pass(&trace, topology);
        }
    }

    #[test]
    fn checks_are_deterministic() {
        let topology = Topology::new(
            ids(&[3, 1, 4, 5, 2]),
            vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)],
        )
        .unwrap();
        let trace = run_full(&topology);
        assert_eq!(run_all(&trace, &topology), run_all(&trace, &topology));
    }

    #[test]
    fn convergence_rejects_drift() {
        let topology = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let mut trace = run_full(&topology);
        let last = trace.rounds.len() - 1;
        trace.rounds[last].nodes[0].z = "101".parse().unwrap();
        let report = check_spreading_convergence(&trace, &topology);
        assert_eq!(report.status, CheckStatus::Fail, "{report}");
    }

    #[test]
    fn election_rejects_second_winner() {
        let topology = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let mut trace = run_full(&topology);
        let last = trace.rounds.len() - 1;
        trace.rounds[last].nodes[0].elected = true;
        let report = check_election(&trace, &topology);
        assert_eq!(report.status, CheckStatus::Fail, "{report}");
    }

    #[test]
    fn election_rejects_missing_winner() {
        let topology = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let mut trace = run_full(&topology);
        for record in &mut trace.rounds {
            for node in &mut record.nodes {
                node.elected = false;
            }
        }
        trace.summary.elected_node = None;
        let report = check_election(&trace, &topology);
        assert_eq!(report.status, CheckStatus::Fail, "{report}");
    }

    #[test]
    fn spanning_tree_rejects_cycle() {
        let topology = Topology::new(ids(&[1, 2, 3]), vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let mut trace = run_full(&topology);
        let last = trace.rounds.len() - 1;
        // Point two nodes at each other.
        trace.rounds[last].nodes[0].parent_port = topology.port_of(0, 1);
        trace.rounds[last].nodes[0].role = Role::Follower;
        trace.rounds[last].nodes[1].parent_port = topology.port_of(1, 0);
        trace.rounds[last].nodes[1].role = Role::Follower;
        let report = check_spanning_tree(&trace, &topology);
        assert_eq!(report.status, CheckStatus::Fail, "{report}");
    }

    #[test]
    fn neighbor_forms_reject_wide_gap() {
        let topology = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let mut trace = run_full(&topology);
        // A prefix pair seven letters apart sits outside every form.
        trace.rounds[2].nodes[0].z = "1".parse().unwrap();
        trace.rounds[2].nodes[1].z = "11111111".parse().unwrap();
        let report = check_neighbor_forms(&trace, &topology);
        assert_eq!(report.status, CheckStatus::Fail, "{report}");
        assert!(report.detail.contains("round 2"), "{report}");
    }

    #[test]
    fn form_catalogue_edges() {
        let w = |s: &str| s.parse::<BitWord>().unwrap();
        // Equal and near-prefix pairs need no flags.
        assert!(pair_matches_form(&w("1101"), &w("1101"), false, false));
        assert!(pair_matches_form(&w("1101"), &w("110101"), false, false));
        // A 3..6 letter gap needs the short side mid-delete.
        assert!(!pair_matches_form(&w("1"), &w("11010"), false, false));
        assert!(pair_matches_form(&w("1"), &w("11010"), true, false));
        assert!(pair_matches_form(&w("1"), &w("1101011"), true, false));
        assert!(!pair_matches_form(&w("1"), &w("11010110"), true, false));
        // Splits: bare 1-tail against a 0-tail of up to three letters.
        assert!(pair_matches_form(&w("110"), &w("1110"), false, false));
        assert!(pair_matches_form(&w("1101"), &w("110010"), false, false));
        assert!(!pair_matches_form(&w("11011"), &w("110000"), false, false));
        // 0-side and 1-side both extended: outside the catalogue.
        assert!(!pair_matches_form(&w("11011"), &w("110010"), false, false));
    }

    #[test]
    fn action_sequences_reject_delete_then_append() {
        let topology = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let mut trace = run_full(&topology);
        trace.rounds[2].nodes[0].last_action = SpreadSignal::Delete1;
        trace.rounds[3].nodes[0].last_action = SpreadSignal::Append0;
        let report = check_action_sequences(&trace);
        assert_eq!(report.status, CheckStatus::Fail, "{report}");
        assert!(report.detail.contains("delete1"), "{report}");
    }

    #[test]
    fn replay_rejects_flipped_bit() {
        let topology = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let mut trace = run_full(&topology);
        trace.rounds[4].nodes[1].z = "1111".parse().unwrap();
        let report = check_replay(&trace);
        assert_eq!(report.status, CheckStatus::Fail, "{report}");
    }

    #[test]
    fn final_only_traces_skip_per_round_checks() {
        let topology = Topology::new(ids(&[1, 2]), vec![(0, 1)]).unwrap();
        let config = SimConfig {
            trace_granularity: TraceGranularity::FinalOnly,
            ..SimConfig::for_topology(&topology)
        };
        let trace = run(&topology, &config).unwrap();
        assert_eq!(
            check_neighbor_forms(&trace, &topology).status,
            CheckStatus::Skipped
        );
        assert_eq!(check_replay(&trace).status, CheckStatus::Skipped);
        // The flag-level election facts are still checkable.
        assert_eq!(check_election(&trace, &topology).status, CheckStatus::Pass);
    }

    #[test]
    fn parent_port_of_max_node_stays_empty() {
        let topology = Topology::new(ids(&[2, 7, 3]), vec![(0, 1), (1, 2)]).unwrap();
        let trace = run_full(&topology);
        for record in &trace.rounds {
            assert_eq!(record.nodes[1].parent_port, None::<Port>);
        }
        assert_all_pass(&trace, &topology);
    }
}
