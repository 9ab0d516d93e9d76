//! The per-node state machine.
//!
//! Each node keeps a candidate word `z` that converges to the encoding of
//! the largest identifier in the network. A round is two halves:
//! [`NodeState::apply_round`] picks the single highest-priority update that
//! applies, rewrites `z`, maintains the parent edge and the termination
//! flag, and emits one constant-size message per port;
//! [`NodeState::ingest_messages`] replays the neighbours' announced updates
//! onto the local mirrors, so that at the end of every round each mirror
//! equals the neighbour's actual word.
//!
//! Update rules, in strictly decreasing priority:
//!
//! * delete (two triggers): a neighbour's mirror is a proper prefix of `z`
//!   and that neighbour just deleted — drop `min(gap, 3)` letters; or `z`
//!   and a mirror diverge as `c0x` / `c1y` with `x` non-empty — drop `|x|`
//!   letters. If several deletes are possible the largest amount wins.
//! * change: `z = c0` against a mirror `c1y` — flip the trailing 0 to 1.
//! * append1 / append0: some mirror strictly extends `z` — copy its next
//!   letter.
//! * own append: an active node whose `z` is still a proper prefix of its
//!   own encoded identifier appends its next own letter.
//!
//! A change or a neighbour-driven append also adopts that neighbour as
//! parent and demotes the node to follower; the parent edges form the
//! spanning tree. The termination flag implements propagation with
//! feedback over that tree: it climbs from the leaves once words agree
//! everywhere, and the unique node that is still active with a complete
//! own word and unanimous, terminated neighbours declares itself elected.

use std::fmt;

use thiserror::Error;

use crate::encoding::{self, BitWord, Identifier};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("a node must have at least one neighbour")]
    ZeroDegree,
    #[error("expected {expected} messages (one per port), got {got}")]
    MessageCount { expected: usize, got: usize },
    #[error("port {port}: cannot replay {signal} onto mirror {mirror}")]
    MirrorReplay {
        port: usize,
        signal: &'static str,
        mirror: String,
    },
    #[error("invalid message byte {0:#04x}")]
    InvalidMessageByte(u8),
}

/// The seven ways a word can change in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SpreadSignal {
    #[default]
    Null,
    Append0,
    Append1,
    Delete1,
    Delete2,
    Delete3,
    Change,
}

impl SpreadSignal {
    pub const ALL: [SpreadSignal; 7] = [
        SpreadSignal::Null,
        SpreadSignal::Append0,
        SpreadSignal::Append1,
        SpreadSignal::Delete1,
        SpreadSignal::Delete2,
        SpreadSignal::Delete3,
        SpreadSignal::Change,
    ];

    pub fn code(self) -> u8 {
        match self {
            SpreadSignal::Null => 0,
            SpreadSignal::Append0 => 1,
            SpreadSignal::Append1 => 2,
            SpreadSignal::Delete1 => 3,
            SpreadSignal::Delete2 => 4,
            SpreadSignal::Delete3 => 5,
            SpreadSignal::Change => 6,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        SpreadSignal::ALL.into_iter().find(|s| s.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            SpreadSignal::Null => "null",
            SpreadSignal::Append0 => "append0",
            SpreadSignal::Append1 => "append1",
            SpreadSignal::Delete1 => "delete1",
            SpreadSignal::Delete2 => "delete2",
            SpreadSignal::Delete3 => "delete3",
            SpreadSignal::Change => "change",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        SpreadSignal::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn is_delete(self) -> bool {
        self.delete_amount().is_some()
    }

    pub fn delete_amount(self) -> Option<usize> {
        match self {
            SpreadSignal::Delete1 => Some(1),
            SpreadSignal::Delete2 => Some(2),
            SpreadSignal::Delete3 => Some(3),
            _ => None,
        }
    }

    fn delete_of(amount: usize) -> Self {
        match amount {
            1 => SpreadSignal::Delete1,
            2 => SpreadSignal::Delete2,
            3 => SpreadSignal::Delete3,
            _ => unreachable!("delete amount {amount}"),
        }
    }
}

impl fmt::Display for SpreadSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tree maintenance signal travelling alongside the spreading signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TreeSignal {
    #[default]
    None,
    /// Sent to the neighbour just adopted as parent.
    Parent,
    /// Sent to the neighbour just demoted from parent.
    Other,
}

impl TreeSignal {
    pub fn code(self) -> u8 {
        match self {
            TreeSignal::None => 0,
            TreeSignal::Parent => 1,
            TreeSignal::Other => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        [TreeSignal::None, TreeSignal::Parent, TreeSignal::Other]
            .into_iter()
            .find(|s| s.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            TreeSignal::None => "none",
            TreeSignal::Parent => "parent",
            TreeSignal::Other => "other",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [TreeSignal::None, TreeSignal::Parent, TreeSignal::Other]
            .into_iter()
            .find(|s| s.name() == name)
    }
}

impl fmt::Display for TreeSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The complete per-edge, per-round payload. Fits in six bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RoundMessage {
    pub spread: SpreadSignal,
    pub tree: TreeSignal,
    pub term: bool,
}

impl RoundMessage {
    /// Packs to one byte: bits 0-2 spreading signal, bits 3-4 tree signal,
    /// bit 5 termination flag. Bits 6-7 are always zero.
    pub fn to_byte(self) -> u8 {
        self.spread.code() | (self.tree.code() << 3) | (u8::from(self.term) << 5)
    }

    pub fn from_byte(byte: u8) -> Result<Self, ProtocolError> {
        let spread = SpreadSignal::from_code(byte & 0b111);
        let tree = TreeSignal::from_code((byte >> 3) & 0b11);
        let term = byte & 0b10_0000 != 0;
        match (spread, tree, byte >> 6) {
            (Some(spread), Some(tree), 0) => Ok(RoundMessage { spread, tree, term }),
            _ => Err(ProtocolError::InvalidMessageByte(byte)),
        }
    }
}

/// What a neighbour is to this node, tree-wise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeStatus {
    /// The neighbour chose this node as its parent.
    Child,
    /// This node chose the neighbour as its parent.
    Parent,
    Other,
}

impl TreeStatus {
    pub fn name(self) -> &'static str {
        match self {
            TreeStatus::Child => "child",
            TreeStatus::Parent => "parent",
            TreeStatus::Other => "other",
        }
    }
}

/// Everything a node tracks about one neighbour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborMirror {
    z: BitWord,
    last_was_delete: bool,
    term: bool,
    status: TreeStatus,
}

impl NeighborMirror {
    fn initial() -> Self {
        NeighborMirror {
            z: BitWord::empty(),
            last_was_delete: false,
            term: false,
            status: TreeStatus::Other,
        }
    }

    pub fn z(&self) -> &BitWord {
        &self.z
    }

    pub fn last_was_delete(&self) -> bool {
        self.last_was_delete
    }

    pub fn term(&self) -> bool {
        self.term
    }

    pub fn status(&self) -> TreeStatus {
        self.status
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Still a candidate: no larger identifier observed so far.
    Active,
    Follower,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Active => "active",
            Role::Follower => "follower",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "active" => Some(Role::Active),
            "follower" => Some(Role::Follower),
            _ => None,
        }
    }
}

/// A 1-based local channel number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Port(usize);

impl Port {
    pub fn new(number: usize) -> Option<Self> {
        (number >= 1).then_some(Port(number))
    }

    pub fn from_index(index: usize) -> Self {
        Port(index + 1)
    }

    pub fn number(self) -> usize {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Where an append or change decision came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    /// Copied from the neighbour behind this port.
    Port(Port),
    /// The node's own next identifier letter.
    Own,
}

/// The unique action selected for one round, before it is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadingDecision {
    Delete(usize),
    Change(Port),
    Append1(Witness),
    Append0(Witness),
    Null,
}

/// One node's full protocol state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    id: Identifier,
    y: BitWord,
    z: BitWord,
    role: Role,
    mirrors: Vec<NeighborMirror>,
    parent_port: Option<Port>,
    term: bool,
    elected: bool,
    last_action: SpreadSignal,
}

impl NodeState {
    /// Fresh state: active, empty word, all mirrors empty. A node needs at
    /// least one neighbour — the election condition quantifies over them.
    pub fn init(id: Identifier, degree: usize) -> Result<Self, ProtocolError> {
        if degree == 0 {
            return Err(ProtocolError::ZeroDegree);
        }
        let y = encoding::encode_alpha(&id);
        Ok(NodeState {
            id,
            y,
            z: BitWord::empty(),
            role: Role::Active,
            mirrors: vec![NeighborMirror::initial(); degree],
            parent_port: None,
            term: false,
            elected: false,
            last_action: SpreadSignal::Null,
        })
    }

    pub fn id(&self) -> &Identifier {
        &self.id
    }

    /// The node's own encoded identifier; fixed for the whole run.
    pub fn y(&self) -> &BitWord {
        &self.y
    }

    /// The highest prefix known so far.
    pub fn z(&self) -> &BitWord {
        &self.z
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn degree(&self) -> usize {
        self.mirrors.len()
    }

    pub fn mirror(&self, port: Port) -> &NeighborMirror {
        &self.mirrors[port.index()]
    }

    pub fn mirrors(&self) -> impl Iterator<Item = (Port, &NeighborMirror)> {
        self.mirrors
            .iter()
            .enumerate()
            .map(|(i, m)| (Port::from_index(i), m))
    }

    pub fn parent_port(&self) -> Option<Port> {
        self.parent_port
    }

    pub fn term(&self) -> bool {
        self.term
    }

    pub fn elected(&self) -> bool {
        self.elected
    }

    pub fn last_action(&self) -> SpreadSignal {
        self.last_action
    }

    /// Picks the unique action for this round from the end-of-previous-round
    /// state. Pure; does not modify anything.
    pub fn select_spreading_action(&self) -> SpreadingDecision {
        // Deletes first. Both triggers compete on amount; the largest wins.
        let mut best_delete = 0usize;
        for m in &self.mirrors {
            if m.last_was_delete && m.z.is_proper_prefix_of(&self.z) {
                best_delete = best_delete.max((self.z.len() - m.z.len()).min(3));
            }
            let c = self.z.common_prefix_len(&m.z);
            if self.z.len() > c + 1 && !self.z.bit(c) && m.z.len() > c && m.z.bit(c) {
                best_delete = best_delete.max(self.z.len() - c - 1);
            }
        }
        if best_delete > 0 {
            assert!(
                best_delete <= 3,
                "delete of {best_delete} letters selected; neighbour words drifted \
                 beyond the bounded divergence the rules maintain"
            );
            return SpreadingDecision::Delete(best_delete);
        }

        // Change: z = c0 against some mirror c1y. Lowest qualifying port.
        if self.z.last() == Some(false) {
            let stem = self.z.len() - 1;
            for (i, m) in self.mirrors.iter().enumerate() {
                if m.z.len() > stem && m.z.bit(stem) && self.z.common_prefix_len(&m.z) == stem {
                    return SpreadingDecision::Change(Port::from_index(i));
                }
            }
        }

        // Appends copied from a strictly longer mirror, 1 before 0.
        for (i, m) in self.mirrors.iter().enumerate() {
            if self.z.is_proper_prefix_of(&m.z) && m.z.bit(self.z.len()) {
                return SpreadingDecision::Append1(Witness::Port(Port::from_index(i)));
            }
        }
        for (i, m) in self.mirrors.iter().enumerate() {
            if self.z.is_proper_prefix_of(&m.z) && !m.z.bit(self.z.len()) {
                return SpreadingDecision::Append0(Witness::Port(Port::from_index(i)));
            }
        }

        // Own append while still a candidate.
        if self.role == Role::Active && self.z.is_proper_prefix_of(&self.y) {
            return if self.y.bit(self.z.len()) {
                SpreadingDecision::Append1(Witness::Own)
            } else {
                SpreadingDecision::Append0(Witness::Own)
            };
        }

        SpreadingDecision::Null
    }

    /// Runs one round from this node's side: applies the selected action,
    /// maintains parent and termination state, and produces the outgoing
    /// message for every port. Mirrors must reflect the end of the previous
    /// round; they are not modified here.
    pub fn apply_round(&self) -> (NodeState, Vec<RoundMessage>) {
        let mut next = self.clone();
        let decision = self.select_spreading_action();

        let (signal, witness) = match decision {
            SpreadingDecision::Delete(k) => {
                next.z.delete_last(k);
                (SpreadSignal::delete_of(k), None)
            }
            SpreadingDecision::Change(port) => {
                next.z.change_last_to_one();
                (SpreadSignal::Change, Some(port))
            }
            SpreadingDecision::Append1(w) => {
                next.z.push(true);
                (SpreadSignal::Append1, w.port())
            }
            SpreadingDecision::Append0(w) => {
                next.z.push(false);
                (SpreadSignal::Append0, w.port())
            }
            SpreadingDecision::Null => (SpreadSignal::Null, None),
        };
        next.last_action = signal;
        if signal != SpreadSignal::Null {
            next.term = false;
        }

        // A change or neighbour-driven append adopts the witness as parent.
        let mut announce_parent = None;
        let mut announce_other = None;
        if let Some(port) = witness {
            next.role = Role::Follower;
            if self.parent_port != Some(port) {
                if let Some(prev) = self.parent_port {
                    next.mirrors[prev.index()].status = TreeStatus::Other;
                    announce_other = Some(prev);
                }
                next.parent_port = Some(port);
                next.mirrors[port.index()].status = TreeStatus::Parent;
                announce_parent = Some(port);
            }
        }

        // Termination climbs from the leaves: a quiet follower holding a
        // complete word that all mirrors agree on, whose children have all
        // reported done, is done itself.
        if next.role == Role::Follower
            && !next.term
            && encoding::is_well_formed(&next.z)
            && next.mirrors.iter().all(|m| m.z == next.z)
            && next
                .mirrors
                .iter()
                .filter(|m| m.status == TreeStatus::Child)
                .all(|m| m.term)
        {
            next.term = true;
        }

        // Election: the still-active node with its own complete word,
        // unanimous mirrors and fully terminated neighbours wins.
        if next.role == Role::Active
            && next.z == next.y
            && next.mirrors.iter().all(|m| m.z == next.z && m.term)
        {
            next.elected = true;
        }

        debug_assert_eq!(next.role == Role::Active, next.parent_port.is_none());

        let outgoing = (0..next.mirrors.len())
            .map(|i| {
                let port = Port::from_index(i);
                let tree = if announce_parent == Some(port) {
                    TreeSignal::Parent
                } else if announce_other == Some(port) {
                    TreeSignal::Other
                } else {
                    TreeSignal::None
                };
                RoundMessage {
                    spread: signal,
                    tree,
                    term: next.term,
                }
            })
            .collect();

        (next, outgoing)
    }

    /// Replays the neighbours' announced updates onto the mirrors, one
    /// message per port. Fails when a signal cannot apply to the mirror it
    /// targets — that only happens on a corrupted or mismatched message
    /// stream, never in a lock-step execution.
    pub fn ingest_messages(&self, incoming: &[RoundMessage]) -> Result<NodeState, ProtocolError> {
        if incoming.len() != self.mirrors.len() {
            return Err(ProtocolError::MessageCount {
                expected: self.mirrors.len(),
                got: incoming.len(),
            });
        }
        let mut next = self.clone();
        for (i, msg) in incoming.iter().enumerate() {
            let mirror = &mut next.mirrors[i];
            match msg.spread {
                SpreadSignal::Null => {}
                SpreadSignal::Append0 => mirror.z.push(false),
                SpreadSignal::Append1 => mirror.z.push(true),
                SpreadSignal::Delete1 | SpreadSignal::Delete2 | SpreadSignal::Delete3 => {
                    let k = msg.spread.delete_amount().unwrap();
                    if mirror.z.len() < k {
                        return Err(ProtocolError::MirrorReplay {
                            port: i + 1,
                            signal: msg.spread.name(),
                            mirror: mirror.z.to_string(),
                        });
                    }
                    mirror.z.delete_last(k);
                }
                SpreadSignal::Change => {
                    if mirror.z.last() != Some(false) {
                        return Err(ProtocolError::MirrorReplay {
                            port: i + 1,
                            signal: msg.spread.name(),
                            mirror: mirror.z.to_string(),
                        });
                    }
                    mirror.z.change_last_to_one();
                }
            }
            mirror.last_was_delete = msg.spread.is_delete();
            mirror.term = msg.term;
            match msg.tree {
                TreeSignal::Parent => mirror.status = TreeStatus::Child,
                TreeSignal::Other => mirror.status = TreeStatus::Other,
                TreeSignal::None => {}
            }
        }
        Ok(next)
    }
}

impl Witness {
    fn port(self) -> Option<Port> {
        match self {
            Witness::Port(p) => Some(p),
            Witness::Own => None,
        }
    }
}
