//! Brute-force reference solutions shared by the integration tests.
//!
//! Nothing here uses the library's solvers: transitions are rebuilt from
//! scratch and optimal costs come from plain search.

#![allow(dead_code)]

use beamcast::phy::UserSet;
use beamcast::LinkTable;

/// A small joint problem described only by numbers.
#[derive(Debug, Clone)]
pub struct Model {
    pub n: usize,
    pub m: u32,
    pub r_max: u32,
    pub x_cap: u32,
    pub eps: f64,
    pub durations: Vec<f64>,
    /// `(members, decode probability per scheme)`.
    pub groups: Vec<(Vec<usize>, Vec<f64>)>,
}

impl Model {
    pub fn from_links(
        n: usize,
        m: u32,
        r_max: u32,
        x_cap: u32,
        eps: f64,
        links: &LinkTable,
        groups: &[UserSet],
    ) -> Self {
        Model {
            n,
            m,
            r_max,
            x_cap,
            eps,
            durations: links.durations.clone(),
            groups: groups.iter().map(|&g| (g.iter().collect(), links.get(g).unwrap().worst.clone())).collect(),
        }
    }

    /// Per-beam choices `(packets, scheme)`, with a single "off" entry.
    fn beam_choices(&self) -> Vec<(u32, usize)> {
        let mut out = vec![(0, 0)];
        for x in 1..=self.x_cap {
            for s in 0..self.durations.len() {
                out.push((x, s));
            }
        }
        out
    }

    /// Every joint action: one choice per group.
    pub fn joint_actions(&self) -> Vec<Vec<(u32, usize)>> {
        let choices = self.beam_choices();
        let mut out = vec![Vec::new()];
        for _ in &self.groups {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<(u32, usize)>| {
                    choices.iter().map(move |&c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        out
    }

    pub fn duration(&self, action: &[(u32, usize)]) -> f64 {
        action.iter().map(|&(x, s)| x as f64 * self.durations[s]).sum()
    }

    /// Next states with probabilities; each beam's members share one draw.
    pub fn outcomes(&self, state: &[u32], action: &[(u32, usize)]) -> Vec<(Vec<u32>, f64)> {
        let mut out = vec![(state.to_vec(), 1.0)];
        for ((members, p), &(x, s)) in self.groups.iter().zip(action) {
            let pmf = binomial_pmf(x, p[s]);
            let mut next = Vec::new();
            for (st, w) in &out {
                for (y, &py) in pmf.iter().enumerate() {
                    if py == 0.0 {
                        continue;
                    }
                    let mut r = st.clone();
                    for &i in members {
                        r[i] = r[i].saturating_sub(y as u32);
                    }
                    next.push((r, w * py));
                }
            }
            out = next;
        }
        out
    }

    pub fn penalty(&self, state: &[u32]) -> f64 {
        self.eps * state.iter().filter(|&&r| r > 0).count() as f64
    }

    pub fn initial(&self) -> Vec<u32> {
        vec![self.m; self.n]
    }
}

/// `C(x, y) p^y (1-p)^(x-y)` by direct products.
pub fn binomial_pmf(x: u32, p: f64) -> Vec<f64> {
    (0..=x)
        .map(|y| {
            let mut c = 1.0;
            for k in 0..y {
                c = c * (x - k) as f64 / (k + 1) as f64;
            }
            c * p.powi(y as i32) * (1.0 - p).powi((x - y) as i32)
        })
        .collect()
}

/// Optimal expected cost by searching the full decision tree: at every
/// history, try every joint action and average over every outcome.
pub fn expectimax(model: &Model, state: &[u32], t: u32) -> f64 {
    if t > model.r_max {
        return model.penalty(state);
    }
    let mut best = f64::INFINITY;
    for action in model.joint_actions() {
        let d = model.duration(&action);
        if d >= best {
            continue;
        }
        let future: f64 =
            model.outcomes(state, &action).iter().map(|(next, p)| p * expectimax(model, next, t + 1)).sum();
        best = best.min(d + future);
    }
    best
}

/// Expected cost of a deterministic Markov policy `policy[t][r]` (index into
/// `actions`) for a single user, by propagating the state distribution.
fn evaluate_single(model: &Model, actions: &[Vec<(u32, usize)>], policy: &[Vec<usize>]) -> f64 {
    let mut dist = vec![0.0; model.m as usize + 1];
    dist[model.m as usize] = 1.0;
    let mut cost = 0.0;
    for slot in policy {
        let mut next = vec![0.0; dist.len()];
        for (r, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = &actions[slot[r]];
            cost += w * model.duration(a);
            for (s, p) in model.outcomes(&[r as u32], a) {
                next[s[0] as usize] += w * p;
            }
        }
        dist = next;
    }
    cost + dist.iter().enumerate().map(|(r, &w)| w * model.penalty(&[r as u32])).sum::<f64>()
}

/// Minimum over every deterministic Markov policy of a single-user model,
/// listed one by one.
pub fn enumerate_single_user_policies(model: &Model) -> f64 {
    assert_eq!(model.n, 1);
    let actions = model.joint_actions();
    let slots = model.r_max as usize + 1;
    let states = model.m as usize + 1;
    let cells = slots * states;
    let total = actions.len().pow(cells as u32);
    let mut best = f64::INFINITY;
    let mut policy = vec![vec![0usize; states]; slots];
    for code in 0..total {
        let mut c = code;
        for cell in 0..cells {
            policy[cell / states][cell % states] = c % actions.len();
            c /= actions.len();
        }
        best = best.min(evaluate_single(model, &actions, &policy));
    }
    best
}

/// Synthetic links with the given worst-user probability per group size.
pub fn synthetic_links(n: usize, p: impl Fn(UserSet) -> f64, durations: Vec<f64>) -> LinkTable {
    let k = durations.len();
    LinkTable::from_probabilities(
        durations,
        UserSet::all_groups(n).into_iter().map(|g| (g, vec![vec![p(g); g.len()]; k])),
    )
}

/// Relative-or-absolute closeness.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
