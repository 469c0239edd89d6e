//! Beam actions and the interface every solved policy exposes.

use std::fmt;

use crate::error::Result;
use crate::link::LinkTable;
use crate::phy::UserSet;

/// `packets` MAC packets sent over the beam towards `group` with `scheme`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BeamAction {
    pub group: UserSet,
    pub packets: u32,
    /// Index into the scenario's modulation list.
    pub scheme: usize,
}

impl fmt::Display for BeamAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:x={}:M={}", self.group, self.packets, self.scheme)
    }
}

/// The beams transmitted in one slot, ordered by group, at most one per group.
/// Beams with zero packets are omitted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionSet {
    pub beams: Vec<BeamAction>,
}

impl ActionSet {
    pub fn empty() -> Self {
        ActionSet::default()
    }

    /// Builds a normalized set: zero-packet beams dropped, sorted by group.
    ///
    /// Panics if a group appears twice.
    pub fn new(mut beams: Vec<BeamAction>) -> Self {
        beams.retain(|b| b.packets > 0);
        beams.sort_by_key(|b| b.group);
        assert!(beams.windows(2).all(|w| w[0].group != w[1].group), "duplicate beam group in action set");
        ActionSet { beams }
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn duration(&self, links: &LinkTable) -> f64 {
        self.beams.iter().map(|b| b.packets as f64 * links.durations[b.scheme]).sum()
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.beams.is_empty() {
            return f.write_str("-");
        }
        for (i, b) in self.beams.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Unicast,
    Broadcast,
    Hierarchical,
    Exact,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Unicast => "unicast",
            PolicyKind::Broadcast => "broadcast",
            PolicyKind::Hierarchical => "hierarchical",
            PolicyKind::Exact => "exact",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unicast" => Ok(PolicyKind::Unicast),
            "broadcast" => Ok(PolicyKind::Broadcast),
            "hierarchical" => Ok(PolicyKind::Hierarchical),
            "exact" => Ok(PolicyKind::Exact),
            other => Err(crate::Error::Validation(format!(
                "unknown policy kind {other:?} (expected unicast, broadcast, hierarchical or exact)"
            ))),
        }
    }
}

/// A solved transmission policy that can be replayed slot by slot.
pub trait Policy: Send + Sync {
    fn kind(&self) -> PolicyKind;

    fn n_users(&self) -> usize;

    /// Packets needed per user at the start.
    fn m(&self) -> u32;

    fn r_max(&self) -> u32;

    fn links(&self) -> &LinkTable;

    /// The solver's expected cost from the initial state `<m, .., m>`.
    fn expected_cost(&self) -> f64;

    /// Beams to transmit in slot `t` given each user's residual demand.
    fn actions(&self, residuals: &[u32], t: u32) -> Result<ActionSet>;

    /// Human-readable dump of the full decision table.
    fn dump(&self) -> String;
}
