//! Monte-Carlo replay of a solved policy over random packet losses.
//!
//! Run `i` draws from its own ChaCha8 stream (`seed`, stream `i`), so results
//! are bitwise reproducible regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::ReceptionMode;
use crate::policy::Policy;

/// Half-width multiplier of a 95% normal confidence interval.
pub const Z95: f64 = 1.96;

pub const DEFAULT_RUNS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub runs: u64,
    pub seed: u64,
    pub mode: ReceptionMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { runs: DEFAULT_RUNS, seed: 1, mode: ReceptionMode::WorstUser }
    }
}

/// Result of one replayed transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    pub duration: f64,
    pub failures: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub runs: u64,
    pub seed: u64,
    pub mean_duration: f64,
    pub ci_duration: f64,
    pub mean_failures: f64,
    pub ci_failures: f64,
    pub var_duration: f64,
    pub var_failures: f64,
    pub cov_duration_failures: f64,
}

impl SimStats {
    pub fn from_outcomes(outcomes: &[RunOutcome], seed: u64) -> SimStats {
        let n = outcomes.len() as f64;
        let md = outcomes.iter().map(|o| o.duration).sum::<f64>() / n;
        let mf = outcomes.iter().map(|o| o.failures as f64).sum::<f64>() / n;
        let (mut vd, mut vf, mut c) = (0.0, 0.0, 0.0);
        for o in outcomes {
            let dd = o.duration - md;
            let df = o.failures as f64 - mf;
            vd += dd * dd;
            vf += df * df;
            c += dd * df;
        }
        let denom = (n - 1.0).max(1.0);
        let (vd, vf, c) = (vd / denom, vf / denom, c / denom);
        SimStats {
            runs: outcomes.len() as u64,
            seed,
            mean_duration: md,
            ci_duration: Z95 * (vd / n).sqrt(),
            mean_failures: mf,
            ci_failures: Z95 * (vf / n).sqrt(),
            var_duration: vd,
            var_failures: vf,
            cov_duration_failures: c,
        }
    }

    /// Sample mean of `duration + eps * failures` and its standard error.
    pub fn cost_estimate(&self, eps: f64) -> (f64, f64) {
        let mean = self.mean_duration + eps * self.mean_failures;
        let var = self.var_duration + eps * eps * self.var_failures + 2.0 * eps * self.cov_duration_failures;
        (mean, (var.max(0.0) / self.runs as f64).sqrt())
    }
}

fn binomial<R: Rng>(rng: &mut R, x: u32, p: f64) -> u32 {
    (0..x).filter(|_| rng.random::<f64>() < p).count() as u32
}

/// Replays one transmission on `rng`.
pub fn run_once<R: Rng>(policy: &dyn Policy, mode: ReceptionMode, rng: &mut R) -> Result<RunOutcome> {
    let links = policy.links();
    let mut residuals = vec![policy.m(); policy.n_users()];
    let mut duration = 0.0;
    for t in 0..=policy.r_max() {
        if residuals.iter().all(|&r| r == 0) {
            break;
        }
        let actions = policy.actions(&residuals, t)?;
        duration += actions.duration(links);
        let mut received = vec![0u32; residuals.len()];
        for beam in &actions.beams {
            let link = links.get(beam.group)?;
            match mode {
                ReceptionMode::WorstUser => {
                    let y = binomial(rng, beam.packets, link.worst[beam.scheme]);
                    for i in beam.group.iter() {
                        received[i] += y;
                    }
                }
                ReceptionMode::PerUser => {
                    for (k, i) in beam.group.iter().enumerate() {
                        received[i] += binomial(rng, beam.packets, link.per_user[beam.scheme][k]);
                    }
                }
            }
        }
        for (r, y) in residuals.iter_mut().zip(received) {
            *r = r.saturating_sub(y);
        }
    }
    Ok(RunOutcome { duration, failures: residuals.iter().filter(|&&r| r > 0).count() as u32 })
}

/// Stream-separated generator for run `index`.
pub fn run_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Every run's outcome, in run order.
pub fn simulate_runs(policy: &dyn Policy, config: &SimConfig) -> Result<Vec<RunOutcome>> {
    if config.runs == 0 {
        return Err(Error::validation("runs must be at least 1"));
    }
    (0..config.runs).into_par_iter().map(|i| run_once(policy, config.mode, &mut run_rng(config.seed, i))).collect()
}

pub fn simulate(policy: &dyn Policy, config: &SimConfig) -> Result<SimStats> {
    let outcomes = simulate_runs(policy, config)?;
    Ok(SimStats::from_outcomes(&outcomes, config.seed))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::link::LinkTable;
    use crate::phy::UserSet;
    use crate::policy::{ActionSet, BeamAction, PolicyKind};

    /// Sends a fixed action from the full state and nothing afterwards.
    struct Fixed {
        links: Arc<LinkTable>,
        n: usize,
        m: u32,
        r_max: u32,
        beams: Vec<BeamAction>,
    }

    impl Policy for Fixed {
        fn kind(&self) -> PolicyKind {
            PolicyKind::Exact
        }
        fn n_users(&self) -> usize {
            self.n
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
            0.0
        }
        fn actions(&self, residuals: &[u32], _t: u32) -> Result<ActionSet> {
            let beams = self.beams.iter().filter(|b| b.group.iter().any(|i| residuals[i] > 0)).copied().collect();
            Ok(ActionSet::new(beams))
        }
        fn dump(&self) -> String {
            String::new()
        }
    }

    fn links(p: f64) -> Arc<LinkTable> {
        Arc::new(LinkTable::from_probabilities(
            vec![2e-6, 1e-6],
            UserSet::all_groups(2).into_iter().map(|g| (g, vec![vec![p; g.len()]; 2])),
        ))
    }

    #[test]
    fn perfect_channel_takes_exactly_m_packets() {
        let m = 4;
        let p = Fixed {
            links: links(1.0),
            n: 2,
            m,
            r_max: 2,
            beams: vec![BeamAction { group: UserSet::all(2), packets: m, scheme: 1 }],
        };
        let cfg = SimConfig { runs: 200, ..Default::default() };
        let s = simulate(&p, &cfg).unwrap();
        assert!((s.mean_duration / (m as f64 * 1e-6) - 1.0).abs() < 1e-12);
        assert_eq!(s.mean_failures, 0.0);
        assert!(s.ci_duration < 1e-18);
    }

    #[test]
    fn silent_policy_fails_everyone() {
        let p = Fixed { links: links(0.9), n: 2, m: 3, r_max: 1, beams: vec![] };
        let s = simulate(&p, &SimConfig { runs: 50, ..Default::default() }).unwrap();
        assert_eq!((s.mean_duration, s.mean_failures), (0.0, 2.0));
        assert_eq!(s.cost_estimate(10.0), (20.0, 0.0));
    }

    #[test]
    fn reproducible_and_seed_dependent() {
        let p = Fixed {
            links: links(0.5),
            n: 2,
            m: 3,
            r_max: 3,
            beams: vec![BeamAction { group: UserSet::singleton(0), packets: 3, scheme: 0 }],
        };
        let a = simulate_runs(&p, &SimConfig { runs: 500, seed: 7, ..Default::default() }).unwrap();
        let b = simulate_runs(&p, &SimConfig { runs: 500, seed: 7, ..Default::default() }).unwrap();
        let c = simulate_runs(&p, &SimConfig { runs: 500, seed: 8, ..Default::default() }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // a prefix of a longer simulation is the shorter simulation
        let d = simulate_runs(&p, &SimConfig { runs: 100, seed: 7, ..Default::default() }).unwrap();
        assert_eq!(&a[..100], &d[..]);
        // user 2 is never served
        assert!(a.iter().all(|o| o.failures >= 1));
    }

    #[test]
    fn worst_user_mode_shares_the_draw() {
        let p = Fixed {
            links: links(0.5),
            n: 2,
            m: 2,
            r_max: 0,
            beams: vec![BeamAction { group: UserSet::all(2), packets: 3, scheme: 0 }],
        };
        let shared = simulate_runs(&p, &SimConfig { runs: 2000, seed: 3, mode: ReceptionMode::WorstUser }).unwrap();
        assert!(shared.iter().all(|o| o.failures == 0 || o.failures == 2));
        let split = simulate_runs(&p, &SimConfig { runs: 2000, seed: 3, mode: ReceptionMode::PerUser }).unwrap();
        assert!(split.iter().any(|o| o.failures == 1));
        // P(Bin(3, 1/2) < 2) = 1/2 per user either way
        let mean = split.iter().map(|o| o.failures as f64).sum::<f64>() / 2000.0;
        assert!((mean - 1.0).abs() < 0.1);
    }

    #[test]
    fn estimate_matches_binomial_law() {
        let p = Fixed {
            links: links(0.3),
            n: 2,
            m: 1,
            r_max: 0,
            beams: vec![BeamAction { group: UserSet::singleton(0), packets: 2, scheme: 0 }],
        };
        let s = simulate(&p, &SimConfig { runs: 40_000, seed: 11, ..Default::default() }).unwrap();
        // user 1 fails w.p. 0.49, user 2 always
        assert!((s.mean_failures - 1.49).abs() < 3.0 * s.ci_failures);
        assert!((s.mean_duration / 4e-6 - 1.0).abs() < 1e-12);
        let small = simulate(&p, &SimConfig { runs: 10_000, seed: 11, ..Default::default() }).unwrap();
        let ratio = small.ci_failures / s.ci_failures;
        assert!((ratio - 2.0).abs() < 0.1);
    }

    #[test]
    fn zero_runs_rejected() {
        let p = Fixed { links: links(0.5), n: 2, m: 1, r_max: 0, beams: vec![] };
        assert!(simulate(&p, &SimConfig { runs: 0, ..Default::default() }).is_err());
    }
}
