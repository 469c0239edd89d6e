//! Planning multicast transmissions over directional mmWave beams.
//!
//! A base station serves `N` users that each need `m` MAC packets of a
//! packet-level FEC code before a deadline of `r_max + 1` slots. Every slot
//! it picks a set of beams, the packet count on each and a modulation
//! scheme, trading airtime against a penalty `epsilon` per user that misses
//! the deadline.
//!
//! * [`phy`] and [`link`]: sectored antenna, link budget and fading-averaged
//!   packet decode probabilities.
//! * [`mdp`]: exact finite-horizon MDP over joint residual states.
//! * [`hierarchy`]: tree-structured approximation with per-node aggregate
//!   states and budget actions.
//! * [`baseline`]: unicast-only and broadcast-only reference policies.
//! * [`sim`]: Monte Carlo replay of any policy.
//! * [`sweep`]: penalty sweeps, CSV output and figure recipes.

pub mod baseline;
pub mod error;
pub mod hierarchy;
pub mod link;
pub mod mdp;
pub mod phy;
pub mod policy;
pub mod quadrature;
pub mod scenario;
pub mod sim;
pub mod sweep;

pub use error::{Error, Result};
pub use link::LinkTable;
pub use policy::{ActionSet, BeamAction, Policy, PolicyKind};
pub use scenario::Scenario;
