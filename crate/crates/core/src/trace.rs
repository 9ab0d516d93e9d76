//! Execution traces.
//!
//! A trace is the complete serialized history of one run: the topology it
//! ran on, per round the state of every node and the message on every
//! directed edge, and a closing summary. Traces are the input to the
//! verification checks and are written deterministically, so identical runs
//! produce identical bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::encoding::{BitWord, Identifier};
use crate::protocol::{NodeState, Port, Role, RoundMessage, SpreadSignal, TreeSignal};
use crate::topology::{Topology, TopologyError};

pub const TRACE_HEADER: &str = "bitelect-trace 1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("embedded topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("round {round}: {message}")]
    Inconsistent { round: u32, message: String },
}

/// How much of the run a trace retains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceGranularity {
    /// Every round: states and messages. Required by the per-round checks.
    #[default]
    PerRound,
    /// Only the initial and final states; no messages.
    FinalOnly,
}

impl TraceGranularity {
    pub fn name(self) -> &'static str {
        match self {
            TraceGranularity::PerRound => "per-round",
            TraceGranularity::FinalOnly => "final-only",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "per-round" => Some(TraceGranularity::PerRound),
            "final-only" => Some(TraceGranularity::FinalOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// The round budget ran out before the network went quiet.
    Timeout,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Completed => "completed",
            Outcome::Timeout => "timeout",
        }
    }
}

/// One node's externally visible state at the end of a round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSnapshot {
    pub z: BitWord,
    pub role: Role,
    pub parent_port: Option<Port>,
    pub term: bool,
    pub elected: bool,
    pub last_action: SpreadSignal,
}

impl NodeSnapshot {
    pub fn of(state: &NodeState) -> Self {
        NodeSnapshot {
            z: state.z().clone(),
            role: state.role(),
            parent_port: state.parent_port(),
            term: state.term(),
            elected: state.elected(),
            last_action: state.last_action(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectedMessage {
    pub from: usize,
    pub to: usize,
    pub message: RoundMessage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundRecord {
    pub round: u32,
    pub nodes: Vec<NodeSnapshot>,
    pub messages: Vec<DirectedMessage>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSummary {
    pub outcome: Outcome,
    pub elected_node: Option<usize>,
    pub elected_id: Option<Identifier>,
    pub rounds_to_election: Option<u32>,
    pub rounds_to_quiescence: Option<u32>,
    pub diameter: u32,
    pub alpha_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrace {
    pub topology: Topology,
    pub granularity: TraceGranularity,
    /// Round 0 is the initial state; it carries no messages.
    pub rounds: Vec<RoundRecord>,
    pub summary: TraceSummary,
}

impl RoundTrace {
    pub fn final_round(&self) -> &RoundRecord {
        self.rounds.last().expect("trace has at least round 0")
    }

    pub fn round(&self, round: u32) -> Option<&RoundRecord> {
        self.rounds.iter().find(|r| r.round == round)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{TRACE_HEADER}").unwrap();
        writeln!(out, "granularity {}", self.granularity.name()).unwrap();
        writeln!(out, "topology").unwrap();
        out.push_str(&self.topology.to_text());
        writeln!(out, "end-topology").unwrap();
        for record in &self.rounds {
            writeln!(out, "round {}", record.round).unwrap();
            for (i, node) in record.nodes.iter().enumerate() {
                writeln!(
                    out,
                    "node {i} z={} role={} parent={} term={} elected={} action={}",
                    node.z,
                    node.role.name(),
                    node.parent_port
                        .map_or_else(|| "-".to_string(), |p| p.to_string()),
                    u8::from(node.term),
                    u8::from(node.elected),
                    node.last_action.name(),
                )
                .unwrap();
            }
            for m in &record.messages {
                writeln!(
                    out,
                    "msg {} {} spread={} tree={} term={}",
                    m.from,
                    m.to,
                    m.message.spread.name(),
                    m.message.tree.name(),
                    u8::from(m.message.term),
                )
                .unwrap();
            }
        }
        let s = &self.summary;
        writeln!(
            out,
            "summary outcome={} elected_node={} elected_id={} rounds_election={} \
             rounds_quiescent={} diameter={} alpha_len={}",
            s.outcome.name(),
            opt(s.elected_node),
            s.elected_id
                .as_ref()
                .map_or_else(|| "-".to_string(), |id| id.to_string()),
            opt(s.rounds_to_election),
            opt(s.rounds_to_quiescence),
            s.diameter,
            s.alpha_len,
        )
        .unwrap();
        out
    }

    pub fn parse(text: &str) -> Result<Self, TraceError> {
        Parser::new(text).parse()
    }
}

fn opt<T: ToString>(value: Option<T>) -> String {
    value.map_or_else(|| "-".to_string(), |v| v.to_string())
}

struct Parser<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim_end()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Parser { lines, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.peek();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), TraceError> {
        self.next().ok_or_else(|| TraceError::Parse {
            line: self.lines.last().map_or(0, |(n, _)| *n),
            message: format!("unexpected end of trace, expected {what}"),
        })
    }

    fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, TraceError> {
        Err(TraceError::Parse {
            line,
            message: message.into(),
        })
    }

    fn parse(mut self) -> Result<RoundTrace, TraceError> {
        let (line, header) = self.expect("header")?;
        if header != TRACE_HEADER {
            return Self::fail(line, format!("unrecognised header {header:?}"));
        }
        let (line, gran) = self.expect("granularity")?;
        let granularity = gran
            .strip_prefix("granularity ")
            .and_then(TraceGranularity::from_name)
            .ok_or_else(|| TraceError::Parse {
                line,
                message: format!("bad granularity line {gran:?}"),
            })?;

        let (line, topo_open) = self.expect("topology section")?;
        if topo_open != "topology" {
            return Self::fail(line, "expected `topology`");
        }
        let mut topo_text = String::new();
        loop {
            let (line, l) = self.expect("end-topology")?;
            if l == "end-topology" {
                break;
            }
            let _ = line;
            topo_text.push_str(l);
            topo_text.push('\n');
        }
        let topology = Topology::parse(&topo_text)?;
        let n = topology.node_count();

        let mut rounds = Vec::new();
        let mut summary = None;
        while let Some((line, l)) = self.next() {
            if let Some(rest) = l.strip_prefix("round ") {
                let round: u32 = rest
                    .parse()
                    .map_err(|_| TraceError::Parse {
                        line,
                        message: format!("bad round number {rest:?}"),
                    })?;
                let mut nodes = Vec::with_capacity(n);
                for expected in 0..n {
                    let (line, l) = self.expect("node record")?;
                    nodes.push(self.parse_node(line, l, expected)?);
                }
                let mut messages = Vec::new();
                while let Some((_, l)) = self.peek() {
                    if !l.starts_with("msg ") {
                        break;
                    }
                    let (line, l) = self.next().unwrap();
                    messages.push(self.parse_message(line, l, n)?);
                }
                rounds.push(RoundRecord {
                    round,
                    nodes,
                    messages,
                });
            } else if let Some(rest) = l.strip_prefix("summary ") {
                summary = Some(self.parse_summary(line, rest)?);
                if let Some((line, l)) = self.next() {
                    return Self::fail(line, format!("trailing content {l:?}"));
                }
                break;
            } else {
                return Self::fail(line, format!("unexpected line {l:?}"));
            }
        }
        let summary = summary.ok_or_else(|| TraceError::Parse {
            line: 0,
            message: "missing summary".into(),
        })?;

        let trace = RoundTrace {
            topology,
            granularity,
            rounds,
            summary,
        };
        trace.validate_structure()?;
        Ok(trace)
    }

    fn parse_node(
        &self,
        line: usize,
        l: &str,
        expected_index: usize,
    ) -> Result<NodeSnapshot, TraceError> {
        let rest = l
            .strip_prefix("node ")
            .ok_or_else(|| TraceError::Parse {
                line,
                message: format!("expected node record, got {l:?}"),
            })?;
        let mut parts = rest.split_whitespace();
        let index: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| TraceError::Parse {
                line,
                message: "bad node index".into(),
            })?;
        if index != expected_index {
            return Self::fail(line, format!("expected node {expected_index}, got {index}"));
        }
        let mut z = None;
        let mut role = None;
        let mut parent = None;
        let mut term = None;
        let mut elected = None;
        let mut action = None;
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| TraceError::Parse {
                line,
                message: format!("bad field {part:?}"),
            })?;
            match key {
                "z" => z = Some(BitWord::from_str(value)),
                "role" => role = Role::from_name(value).map(Ok),
                "parent" => {
                    parent = Some(if value == "-" {
                        Ok(None)
                    } else {
                        value
                            .parse::<usize>()
                            .ok()
                            .and_then(Port::new)
                            .map(|p| Ok(Some(p)))
                            .unwrap_or(Err(()))
                    })
                }
                "term" => term = parse_bit(value).map(Ok),
                "elected" => elected = parse_bit(value).map(Ok),
                "action" => action = SpreadSignal::from_name(value).map(Ok),
                _ => return Self::fail(line, format!("unknown field {key:?}")),
            }
        }
        let bad = |what: &str| TraceError::Parse {
            line,
            message: format!("missing or invalid {what}"),
        };
        Ok(NodeSnapshot {
            z: z.ok_or_else(|| bad("z"))?.map_err(|_| bad("z"))?,
            role: role.ok_or_else(|| bad("role"))?.map_err(|()| bad("role"))?,
            parent_port: parent
                .ok_or_else(|| bad("parent"))?
                .map_err(|()| bad("parent"))?,
            term: term.ok_or_else(|| bad("term"))?.map_err(|()| bad("term"))?,
            elected: elected
                .ok_or_else(|| bad("elected"))?
                .map_err(|()| bad("elected"))?,
            last_action: action
                .ok_or_else(|| bad("action"))?
                .map_err(|()| bad("action"))?,
        })
    }

    fn parse_message(
        &self,
        line: usize,
        l: &str,
        n: usize,
    ) -> Result<DirectedMessage, TraceError> {
        let rest = l.strip_prefix("msg ").unwrap();
        let mut parts = rest.split_whitespace();
        let mut index = |what: &str| -> Result<usize, TraceError> {
            parts
                .next()
                .and_then(|t| t.parse::<usize>().ok())
                .filter(|&i| i < n)
                .ok_or_else(|| TraceError::Parse {
                    line,
                    message: format!("bad message {what}"),
                })
        };
        let from = index("sender")?;
        let to = index("recipient")?;
        let mut spread = None;
        let mut tree = None;
        let mut term = None;
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| TraceError::Parse {
                line,
                message: format!("bad field {part:?}"),
            })?;
            match key {
                "spread" => spread = SpreadSignal::from_name(value),
                "tree" => tree = TreeSignal::from_name(value),
                "term" => term = parse_bit(value),
                _ => return Self::fail(line, format!("unknown field {key:?}")),
            }
        }
        match (spread, tree, term) {
            (Some(spread), Some(tree), Some(term)) => Ok(DirectedMessage {
                from,
                to,
                message: RoundMessage { spread, tree, term },
            }),
            _ => Self::fail(line, "incomplete message record"),
        }
    }

    fn parse_summary(&self, line: usize, rest: &str) -> Result<TraceSummary, TraceError> {
        let mut outcome = None;
        let mut elected_node = None;
        let mut elected_id = None;
        let mut rounds_to_election = None;
        let mut rounds_to_quiescence = None;
        let mut diameter = None;
        let mut alpha_len = None;
        for part in rest.split_whitespace() {
            let (key, value) = part.split_once('=').ok_or_else(|| TraceError::Parse {
                line,
                message: format!("bad field {part:?}"),
            })?;
            let missing = |what: &str| TraceError::Parse {
                line,
                message: format!("bad summary field {what}"),
            };
            match key {
                "outcome" => {
                    outcome = Some(match value {
                        "completed" => Outcome::Completed,
                        "timeout" => Outcome::Timeout,
                        _ => return Self::fail(line, format!("bad outcome {value:?}")),
                    })
                }
                "elected_node" => {
                    elected_node = Some(parse_opt::<usize>(value).map_err(|()| missing(key))?)
                }
                "elected_id" => {
                    elected_id = Some(if value == "-" {
                        None
                    } else {
                        Some(Identifier::from_str(value).map_err(|_| missing(key))?)
                    })
                }
                "rounds_election" => {
                    rounds_to_election = Some(parse_opt::<u32>(value).map_err(|()| missing(key))?)
                }
                "rounds_quiescent" => {
                    rounds_to_quiescence =
                        Some(parse_opt::<u32>(value).map_err(|()| missing(key))?)
                }
                "diameter" => diameter = value.parse().ok().map(Some).ok_or(missing(key))?,
                "alpha_len" => alpha_len = value.parse().ok().map(Some).ok_or(missing(key))?,
                _ => return Self::fail(line, format!("unknown field {key:?}")),
            }
        }
        let missing = |what: &str| TraceError::Parse {
            line,
            message: format!("missing summary field {what}"),
        };
        Ok(TraceSummary {
            outcome: outcome.ok_or_else(|| missing("outcome"))?,
            elected_node: elected_node.ok_or_else(|| missing("elected_node"))?,
            elected_id: elected_id.ok_or_else(|| missing("elected_id"))?,
            rounds_to_election: rounds_to_election.ok_or_else(|| missing("rounds_election"))?,
            rounds_to_quiescence: rounds_to_quiescence
                .ok_or_else(|| missing("rounds_quiescent"))?,
            diameter: diameter.ok_or_else(|| missing("diameter"))?,
            alpha_len: alpha_len.ok_or_else(|| missing("alpha_len"))?,
        })
    }
}

fn parse_bit(value: &str) -> Option<bool> {
    match value {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

fn parse_opt<T: FromStr>(value: &str) -> Result<Option<T>, ()> {
    if value == "-" {
        Ok(None)
    } else {
        value.parse().map(Some).map_err(|_| ())
    }
}

impl RoundTrace {
    /// Structural checks: node counts, round numbering, and for per-round
    /// traces one message per directed edge per round.
    fn validate_structure(&self) -> Result<(), TraceError> {
        let n = self.topology.node_count();
        if self.rounds.is_empty() || self.rounds[0].round != 0 {
            return Err(TraceError::Inconsistent {
                round: 0,
                message: "trace must start at round 0".into(),
            });
        }
        for record in &self.rounds {
            if record.nodes.len() != n {
                return Err(TraceError::Inconsistent {
                    round: record.round,
                    message: format!("expected {n} node records, got {}", record.nodes.len()),
                });
            }
        }
        match self.granularity {
            TraceGranularity::PerRound => {
                let mut expected: Vec<(usize, usize)> = Vec::new();
                for u in 0..n {
                    for &v in self.topology.neighbors(u) {
                        expected.push((u, v));
                    }
                }
                expected.sort_unstable();
                for (i, record) in self.rounds.iter().enumerate() {
                    if record.round != i as u32 {
                        return Err(TraceError::Inconsistent {
                            round: record.round,
                            message: "rounds must be consecutive from 0".into(),
                        });
                    }
                    if record.round == 0 {
                        if !record.messages.is_empty() {
                            return Err(TraceError::Inconsistent {
                                round: 0,
                                message: "round 0 carries no messages".into(),
                            });
                        }
                        continue;
                    }
                    let mut got: Vec<(usize, usize)> = record
                        .messages
                        .iter()
                        .map(|m| (m.from, m.to))
                        .collect();
                    got.sort_unstable();
                    if got != expected {
                        return Err(TraceError::Inconsistent {
                            round: record.round,
                            message: "expected exactly one message per directed edge".into(),
                        });
                    }
                }
            }
            TraceGranularity::FinalOnly => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{run, SimConfig};

    fn p2() -> Topology {
        Topology::new(
            vec![
                Identifier::from_u64(1).unwrap(),
                Identifier::from_u64(2).unwrap(),
            ],
            vec![(0, 1)],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let topo = p2();
        let trace = run(&topo, &SimConfig::for_topology(&topo)).unwrap();
        let text = trace.to_text();
        let parsed = RoundTrace::parse(&text).unwrap();
        assert_eq!(parsed, trace);
        assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn rejects_missing_message() {
        let topo = p2();
        let trace = run(&topo, &SimConfig::for_topology(&topo)).unwrap();
        let mut text = trace.to_text();
        let msg_line = text
            .lines()
            .find(|l| l.starts_with("msg "))
            .unwrap()
            .to_string();
        text = text.replacen(&format!("{msg_line}\n"), "", 1);
        assert!(matches!(
            RoundTrace::parse(&text),
            Err(TraceError::Inconsistent { .. })
        ));
    }

    #[test]
    fn rejects_garbled_field() {
        let topo = p2();
        let trace = run(&topo, &SimConfig::for_topology(&topo)).unwrap();
        let text = trace.to_text().replace("role=active", "role=emperor");
        assert!(matches!(
            RoundTrace::parse(&text),
            Err(TraceError::Parse { .. })
        ));
    }
}
