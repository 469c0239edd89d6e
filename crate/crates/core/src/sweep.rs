//! Penalty sweeps: solve, replay and tabulate one policy family over a grid of ε.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{BroadcastPolicy, UnicastPolicy};
use crate::error::{Error, Result};
use crate::hierarchy::{build_tree, solve_tree};
use crate::link::LinkTable;
use crate::mdp::{ExactOptions, ExactPolicy, ExactProblem};
use crate::phy::{User, UserSet};
use crate::policy::{Policy, PolicyKind};
use crate::scenario::Scenario;
use crate::sim::{simulate, SimConfig};

pub const CSV_HEADER: &str =
    "scenario,policy,epsilon,m,rmax,mean_duration_s,ci_duration_s,mean_failures,ci_failures,J0,n_runs,seed";

/// One `(policy, ε)` point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub policy: String,
    pub epsilon: f64,
    pub m: u32,
    pub rmax: u32,
    pub mean_duration_s: f64,
    pub ci_duration_s: f64,
    pub mean_failures: f64,
    pub ci_failures: f64,
    #[serde(rename = "J0")]
    pub j0: f64,
    pub n_runs: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: PolicyKind,
    /// Empty means the default grid for the scenario.
    pub epsilons: Vec<f64>,
    pub sim: SimConfig,
    pub exact: ExactOptions,
}

/// Beam groups a policy family needs link data for.
pub fn groups_for(scenario: &Scenario, kind: PolicyKind, exact: &ExactOptions) -> Result<Vec<UserSet>> {
    let n = scenario.n_users();
    Ok(match kind {
        PolicyKind::Unicast => (0..n).map(UserSet::singleton).collect(),
        PolicyKind::Broadcast => vec![UserSet::all(n)],
        PolicyKind::Hierarchical => build_tree(scenario)?.groups(),
        PolicyKind::Exact => {
            if n > exact.max_users && !exact.allow_large {
                return Err(Error::capacity(format!(
                    "exact solver refuses {n} users (limit {}); use the hierarchical solver or override",
                    exact.max_users
                )));
            }
            UserSet::all_groups(n)
        }
    })
}

pub fn links_for(scenario: &Scenario, kind: PolicyKind, exact: &ExactOptions) -> Result<Arc<LinkTable>> {
    Ok(Arc::new(LinkTable::build(scenario, groups_for(scenario, kind, exact)?)?))
}

/// Solves one policy of the given family.
pub fn solve_policy(
    scenario: &Scenario,
    kind: PolicyKind,
    epsilon: f64,
    links: Arc<LinkTable>,
    exact: &ExactOptions,
) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Unicast => Box::new(UnicastPolicy::solve(scenario, links, epsilon)?),
        PolicyKind::Broadcast => Box::new(BroadcastPolicy::solve(scenario, links, epsilon)?),
        PolicyKind::Hierarchical => Box::new(solve_tree(scenario, links, epsilon)?),
        PolicyKind::Exact => {
            let n = scenario.n_users();
            let problem = ExactProblem::all_groups(n, scenario.m, scenario.r_max, scenario.x_cap, epsilon, &links)?;
            Box::new(ExactPolicy::solve(&problem, links, exact)?)
        }
    })
}

/// `count` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        }
    }
}

pub const DEFAULT_GRID_POINTS: usize = 12;

/// Default penalty grid: 0.1x to 100x the airtime of sending every user
/// its `m` packets at the fastest scheme.
pub fn default_epsilons(scenario: &Scenario) -> Vec<f64> {
    let tau_min = scenario
        .modulations
        .iter()
        .map(|s| crate::phy::packet_duration(s, scenario.packet_bits(), &scenario.phy))
        .fold(f64::INFINITY, f64::min);
    let base = scenario.m as f64 * tau_min * scenario.n_users() as f64;
    log_grid(0.1 * base, 100.0 * base, DEFAULT_GRID_POINTS)
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    match eps.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        Some(e) => Err(Error::validation(format!("epsilon must be finite and non-negative, got {e}"))),
        None => Ok(()),
    }
}

/// Solves and simulates once per penalty; rows come back in grid order.
///
/// Every point is simulated with the same seed.
pub fn sweep(scenario: &Scenario, config: &SweepConfig) -> Result<Vec<SweepRow>> {
    let epsilons = if config.epsilons.is_empty() { default_epsilons(scenario) } else { config.epsilons.clone() };
    check_epsilons(&epsilons)?;
    let links = links_for(scenario, config.kind, &config.exact)?;
    epsilons
        .par_iter()
        .map(|&eps| {
            let policy = solve_policy(scenario, config.kind, eps, links.clone(), &config.exact)?;
            let stats = simulate(policy.as_ref(), &config.sim)?;
            Ok(SweepRow {
                scenario: scenario.name.clone(),
                policy: config.kind.to_string(),
                epsilon: eps,
                m: scenario.m,
                rmax: scenario.r_max,
                mean_duration_s: stats.mean_duration,
                ci_duration_s: stats.ci_duration,
                mean_failures: stats.mean_failures,
                ci_failures: stats.ci_failures,
                j0: policy.expected_cost(),
                n_runs: stats.runs,
                seed: stats.seed,
            })
        })
        .collect()
}

/// Writes rows (with header) as CSV.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit(rows: &[SweepRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_csv(rows, fs::File::create(path)?)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?)
}

/// Radii (m) and angles (degrees) of the second user in the two-user study.
pub const FIG5_RADII: [f64; 6] = [30.0, 40.0, 50.0, 60.0, 70.0, 80.0];
pub const FIG5_ANGLES: [f64; 8] = [2.0, 4.0, 8.0, 12.0, 16.0, 24.0, 32.0, 40.0];

/// Two-user layout with the second user at `(radius, theta)`.
pub fn two_user_at(radius_m: f64, theta_deg: f64) -> Scenario {
    let mut s = Scenario::two_user();
    s.users[1] = User::new(2, radius_m, theta_deg);
    s.name = format!("twouser-r{radius_m}-th{theta_deg}");
    s
}

/// The scenario/policy pairs behind one figure.
pub fn figure_cases(figure: u32) -> Result<Vec<(Scenario, PolicyKind)>> {
    let kinds = [PolicyKind::Hierarchical, PolicyKind::Unicast];
    let scenarios: Vec<Scenario> = match figure {
        2 => (0..=2)
            .map(|r| {
                let mut s = Scenario::table1().with_protocol(5, r);
                s.name = format!("table1-m5-rmax{r}");
                s
            })
            .collect(),
        3 => [5, 7, 10]
            .into_iter()
            .map(|m| {
                let mut s = Scenario::table1().with_protocol(m, 2);
                s.name = format!("table1-m{m}-rmax2");
                s
            })
            .collect(),
        5 => FIG5_RADII.iter().flat_map(|&r| FIG5_ANGLES.iter().map(move |&th| two_user_at(r, th))).collect(),
        other => return Err(Error::validation(format!("unknown figure {other} (expected 2, 3 or 5)"))),
    };
    Ok(scenarios.into_iter().flat_map(|s| kinds.map(|k| (s.clone(), k))).collect())
}

/// Runs every sweep of a figure and writes `fig<N>.csv` into `out_dir`.
pub fn figure(figure: u32, sim: &SimConfig, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    let mut rows = Vec::new();
    for (scenario, kind) in figure_cases(figure)? {
        let config = SweepConfig {
            kind,
            epsilons: Vec::new(),
            sim: SimConfig { mode: scenario.reception_mode, ..*sim },
            exact: ExactOptions::default(),
        };
        rows.extend(sweep(&scenario, &config)?);
    }
    let path = out_dir.as_ref().join(format!("fig{figure}.csv"));
    emit(&rows, &path)?;
    Ok(path)
}
