//! Deterministic leader election with constant-size messages.
//!
//! Every node pipelines the largest identifier it has seen, one letter per
//! round, using a prefix-free encoding whose lexicographic order matches
//! integer order. Competing broadcasts fight it out letter by letter;
//! bounded correction waves retract stale prefixes, parent edges remember
//! who brought the winning letters and grow a spanning tree, and a
//! feedback wave over that tree lets the winner — and only the winner —
//! detect that everyone agrees. The whole thing settles in rounds
//! proportional to the diameter plus the identifier length, with messages
//! of six bits.
//!
//! The crate ships the node state machine ([`protocol`]), a lock-step
//! network simulator that records complete executions ([`simulator`],
//! [`trace`]), an independent verifier for every guarantee the protocol
//! makes ([`oracle`]), seeded topology generation ([`generate`]) and
//! scaling sweeps ([`sweep`]).

pub mod encoding;
pub mod generate;
pub mod oracle;
pub mod protocol;
pub mod simulator;
pub mod sweep;
pub mod topology;
pub mod trace;

pub use encoding::{decode_alpha, encode_alpha, is_well_formed, lex_compare, BitWord, Identifier};
pub use protocol::{
    NeighborMirror, NodeState, Port, Role, RoundMessage, SpreadSignal, TreeSignal, TreeStatus,
};
pub use simulator::{run, AssertionLevel, SimConfig};
pub use topology::Topology;
pub use trace::{Outcome, RoundTrace, TraceGranularity};
