//! Reference policies: one unicast beam per user, or a single beam to everybody.
//!
//! Both reduce to one-dimensional chains solved with the exact solver.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::link::LinkTable;
use crate::mdp::{value_iteration, Candidate, ExactOptions, ExactProblem, PolicyTable};
use crate::phy::UserSet;
use crate::policy::{ActionSet, BeamAction, Policy, PolicyKind};
use crate::scenario::Scenario;

fn single_chain(
    scenario: &Scenario,
    links: &LinkTable,
    p_dec: Vec<f64>,
    epsilon: f64,
    weight: f64,
) -> Result<PolicyTable> {
    let problem = ExactProblem {
        n_users: 1,
        m: scenario.m,
        r_max: scenario.r_max,
        x_cap: scenario.x_cap,
        epsilon,
        penalty_weight: weight,
        durations: links.durations.clone(),
        candidates: vec![Candidate { group: UserSet::singleton(0), p_dec }],
    };
    value_iteration(&problem, &ExactOptions::default())
}

fn check_residuals(residuals: &[u32], n: usize, m: u32) -> Result<()> {
    if residuals.len() != n || residuals.iter().any(|&r| r > m) {
        return Err(Error::Lookup(format!("residuals {residuals:?} outside the policy table")));
    }
    Ok(())
}

/// Every user is served by its own beam and solved independently.
#[derive(Debug, Clone)]
pub struct UnicastPolicy {
    /// One single-user table per user.
    pub tables: Vec<PolicyTable>,
    links: Arc<LinkTable>,
    m: u32,
    r_max: u32,
}

impl UnicastPolicy {
    pub fn solve(scenario: &Scenario, links: Arc<LinkTable>, epsilon: f64) -> Result<Self> {
        let tables = (0..scenario.n_users())
            .into_par_iter()
            .map(|i| {
                let p = links.get(UserSet::singleton(i))?.worst.clone();
                single_chain(scenario, &links, p, epsilon, 1.0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UnicastPolicy { tables, links, m: scenario.m, r_max: scenario.r_max })
    }

    /// Expected cost of user `i` alone.
    pub fn user_cost(&self, i: usize) -> f64 {
        self.tables[i].j0()
    }
}

impl Policy for UnicastPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Unicast
    }

    fn n_users(&self) -> usize {
        self.tables.len()
    }

    fn m(&self) -> u32 {
        self.m
    }

    fn r_max(&self) -> u32 {
        self.r_max
    }

    fn links(&self) -> &LinkTable {
        &self.links
    }

    fn expected_cost(&self) -> f64 {
        self.tables.iter().map(PolicyTable::j0).sum()
    }

    fn actions(&self, residuals: &[u32], t: u32) -> Result<ActionSet> {
        check_residuals(residuals, self.tables.len(), self.m)?;
        let mut beams = Vec::new();
        for (i, (table, &r)) in self.tables.iter().zip(residuals).enumerate() {
            for b in &table.decision(t, &[r])?.action.beams {
                beams.push(BeamAction { group: UserSet::singleton(i), ..*b });
            }
        }
        Ok(ActionSet::new(beams))
    }

    fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# beamcast unicast policy: {} independent users", self.tables.len());
        let _ = writeln!(out, "J0 {:e}", self.expected_cost());
        for (i, table) in self.tables.iter().enumerate() {
            let _ = writeln!(out, "## user {}", i + 1);
            table.write_dump(&mut out, PolicyKind::Unicast);
        }
        out
    }
}

/// One beam wide enough for every user, driven by the worst user's demand.
#[derive(Debug, Clone)]
pub struct BroadcastPolicy {
    /// Chain of a single virtual user whose failure costs `N` penalties.
    pub table: PolicyTable,
    links: Arc<LinkTable>,
    n_users: usize,
    m: u32,
    r_max: u32,
}

impl BroadcastPolicy {
    pub fn solve(scenario: &Scenario, links: Arc<LinkTable>, epsilon: f64) -> Result<Self> {
        let n = scenario.n_users();
        let p = links.get(UserSet::all(n))?.worst.clone();
        let table = single_chain(scenario, &links, p, epsilon, n as f64)?;
        Ok(BroadcastPolicy { table, links, n_users: n, m: scenario.m, r_max: scenario.r_max })
    }
}

impl Policy for BroadcastPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Broadcast
    }

    fn n_users(&self) -> usize {
        self.n_users
    }

    fn m(&self) -> u32 {
        self.m
    }

    fn r_max(&self) -> u32 {
        self.r_max
    }

    fn links(&self) -> &LinkTable {
        &self.links
    }

    fn expected_cost(&self) -> f64 {
        self.table.j0()
    }

    fn actions(&self, residuals: &[u32], t: u32) -> Result<ActionSet> {
        check_residuals(residuals, self.n_users, self.m)?;
        // under per-user reception residuals can differ; serve the largest
        let r = residuals.iter().copied().max().unwrap_or(0);
        let all = UserSet::all(self.n_users);
        let beams =
            self.table.decision(t, &[r])?.action.beams.iter().map(|b| BeamAction { group: all, ..*b }).collect();
        Ok(ActionSet::new(beams))
    }

    fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# beamcast broadcast policy: {} users on one beam", self.n_users);
        self.table.write_dump(&mut out, PolicyKind::Broadcast);
        out
    }
}
