//! Exact finite-horizon MDP over joint retransmission states.
//!
//! The state is the vector of residual demands `<r_1, .., r_N>`. In every
//! slot the transmitter picks, for each candidate beam group, a packet count
//! and a scheme; each beam delivers a Binomial number of packets (one draw per
//! beam, at the weakest member's decode probability) to all of its members.
//! Backward value iteration yields the cost-to-go `J_t` and the optimal action
//! for every state and slot.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::link::LinkTable;
use crate::phy::UserSet;
use crate::policy::{ActionSet, BeamAction, Policy, PolicyKind};

/// Vector of residual packet demands, one per user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointState(pub Vec<u32>);

impl JointState {
    pub fn full(n: usize, m: u32) -> Self {
        JointState(vec![m; n])
    }

    pub fn is_done(&self) -> bool {
        self.0.iter().all(|&r| r == 0)
    }

    pub fn pending(&self) -> usize {
        self.0.iter().filter(|&&r| r > 0).count()
    }
}

impl std::fmt::Display for JointState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "<{}>", parts.join(","))
    }
}

pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// Mixed-radix indexing of `{0..=m}^n`; the first user is the most
/// significant digit, so indices follow lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    n: usize,
    m: u32,
    strides: Vec<usize>,
    size: usize,
}

impl StateSpace {
    pub fn new(n: usize, m: u32, cap: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::validation("state space needs at least one user and m >= 1"));
        }
        let base = m as usize + 1;
        let size = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(base).filter(|&s| s <= cap));
        let size = size.ok_or_else(|| {
            Error::capacity(format!(
                "joint state space ({}+1)^{} exceeds the cap of {cap} states; use the hierarchical solver",
                m, n
            ))
        })?;
        let mut strides = vec![1; n];
        for i in (0..n - 1).rev() {
            strides[i] = strides[i + 1] * base;
        }
        Ok(StateSpace { n, m, strides, size })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_users(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn index(&self, r: &[u32]) -> usize {
        r.iter().zip(&self.strides).map(|(&ri, &s)| ri as usize * s).sum()
    }

    pub fn state(&self, mut idx: usize) -> Vec<u32> {
        self.strides
            .iter()
            .map(|&s| {
                let d = idx / s;
                idx %= s;
                d as u32
            })
            .collect()
    }

    pub fn contains(&self, r: &[u32]) -> bool {
        r.len() == self.n && r.iter().all(|&x| x <= self.m)
    }
}

/// All `(m+1)^n` joint states in lexicographic order.
pub fn enumerate_states(n: usize, m: u32) -> Result<Vec<JointState>> {
    enumerate_states_capped(n, m, DEFAULT_STATE_CAP)
}

pub fn enumerate_states_capped(n: usize, m: u32, cap: usize) -> Result<Vec<JointState>> {
    let space = StateSpace::new(n, m, cap)?;
    Ok((0..space.len()).map(|i| JointState(space.state(i))).collect())
}

/// Binomial(x, p) probabilities of receiving `y = 0..=x` packets.
pub fn receive_pmf(x: u32, p: f64) -> Vec<f64> {
    let p = p.clamp(0.0, 1.0);
    let q = 1.0 - p;
    let mut choose = 1.0f64;
    (0..=x)
        .map(|y| {
            if y > 0 {
                choose = choose * (x - y + 1) as f64 / y as f64;
            }
            choose * p.powi(y as i32) * q.powi((x - y) as i32)
        })
        .collect()
}

/// One-slot transition law from `state` under `actions` (worst-user
/// reception), as `(next state, probability)` pairs in lexicographic order.
pub fn joint_transition(state: &JointState, actions: &ActionSet, links: &LinkTable) -> Result<Vec<(JointState, f64)>> {
    let mut dist: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    dist.insert(state.0.clone(), 1.0);
    for beam in &actions.beams {
        let p = *links
            .get(beam.group)?
            .worst
            .get(beam.scheme)
            .ok_or_else(|| Error::Lookup(format!("scheme {} out of range", beam.scheme)))?;
        let pmf = receive_pmf(beam.packets, p);
        let mut next = BTreeMap::new();
        for (r, w) in &dist {
            for (y, &py) in pmf.iter().enumerate() {
                if py == 0.0 {
                    continue;
                }
                let mut r2 = r.clone();
                for i in beam.group.iter() {
                    r2[i] = r2[i].saturating_sub(y as u32);
                }
                *next.entry(r2).or_insert(0.0) += w * py;
            }
        }
        dist = next;
    }
    Ok(dist.into_iter().map(|(r, w)| (JointState(r), w)).collect())
}

/// A beam group the exact solver may use, with its worst-user decode
/// probability per scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub group: UserSet,
    pub p_dec: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactProblem {
    pub n_users: usize,
    pub m: u32,
    pub r_max: u32,
    pub x_cap: u32,
    pub epsilon: f64,
    /// Failed users are counted `penalty_weight` times each.
    pub penalty_weight: f64,
    /// Seconds per packet, per scheme.
    pub durations: Vec<f64>,
    /// Sorted by group.
    pub candidates: Vec<Candidate>,
}

impl ExactProblem {
    pub fn new(
        n_users: usize,
        m: u32,
        r_max: u32,
        x_cap: u32,
        epsilon: f64,
        links: &LinkTable,
        groups: &[UserSet],
    ) -> Result<Self> {
        let mut candidates = groups
            .iter()
            .map(|&g| {
                if g.is_empty() || g.iter().any(|i| i >= n_users) {
                    return Err(Error::validation(format!("beam group {g} is not a subset of the users")));
                }
                Ok(Candidate { group: g, p_dec: links.get(g)?.worst.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        candidates.sort_by_key(|c| c.group);
        candidates.dedup_by_key(|c| c.group);
        let problem = ExactProblem {
            n_users,
            m,
            r_max,
            x_cap,
            epsilon,
            penalty_weight: 1.0,
            durations: links.durations.clone(),
            candidates,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Every non-empty group of the scenario's users is a candidate.
    pub fn all_groups(n_users: usize, m: u32, r_max: u32, x_cap: u32, epsilon: f64, links: &LinkTable) -> Result<Self> {
        ExactProblem::new(n_users, m, r_max, x_cap, epsilon, links, &UserSet::all_groups(n_users))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::validation(format!("epsilon must be finite and non-negative, got {}", self.epsilon)));
        }
        if self.durations.is_empty() || self.durations.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::validation("packet durations must be positive"));
        }
        for c in &self.candidates {
            if c.p_dec.len() != self.durations.len() || c.p_dec.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::validation(format!("bad decode probabilities for beam {}", c.group)));
            }
        }
        Ok(())
    }

    pub fn terminal_cost(&self, r: &[u32]) -> f64 {
        self.epsilon * self.penalty_weight * r.iter().filter(|&&x| x > 0).count() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactOptions {
    pub state_cap: usize,
    /// Largest number of joint actions examined for a single state.
    pub action_budget: u64,
    /// Largest user count accepted unless `allow_large` is set.
    pub max_users: usize,
    pub allow_large: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { state_cap: DEFAULT_STATE_CAP, action_budget: 20_000_000, max_users: 4, allow_large: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: ActionSet,
    /// Expected cost-to-go `J_t(r)`.
    pub value: f64,
    /// Airtime of `action`.
    pub duration: f64,
}

/// Optimal decisions for every slot and joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub space: StateSpace,
    pub r_max: u32,
    pub x_cap: u32,
    pub epsilon: f64,
    pub groups: Vec<UserSet>,
    /// `slots[t][state index]` for `t = 0..=r_max`.
    pub slots: Vec<Vec<Decision>>,
    /// `J_{r_max+1}`.
    pub terminal: Vec<f64>,
}

impl PolicyTable {
    pub fn decision(&self, t: u32, r: &[u32]) -> Result<&Decision> {
        if !self.space.contains(r) {
            return Err(Error::Lookup(format!("state {:?} outside the policy table", r)));
        }
        self.slots
            .get(t as usize)
            .map(|slot| &slot[self.space.index(r)])
            .ok_or_else(|| Error::Lookup(format!("slot {t} beyond the horizon")))
    }

    /// `J_t(r)`; `t = r_max + 1` gives the terminal penalty.
    pub fn value(&self, t: u32, r: &[u32]) -> Result<f64> {
        if t == self.r_max + 1 {
            if !self.space.contains(r) {
                return Err(Error::Lookup(format!("state {:?} outside the policy table", r)));
            }
            return Ok(self.terminal[self.space.index(r)]);
        }
        self.decision(t, r).map(|d| d.value)
    }

    pub fn j0(&self) -> f64 {
        self.slots[0][self.space.len() - 1].value
    }

    pub fn write_dump(&self, out: &mut String, kind: PolicyKind) {
        let _ = writeln!(out, "# beamcast policy table");
        let _ = writeln!(out, "kind {kind}");
        let _ = writeln!(out, "users {}", self.space.n_users());
        let _ = writeln!(out, "m {}", self.space.m());
        let _ = writeln!(out, "rmax {}", self.r_max);
        let _ = writeln!(out, "xcap {}", self.x_cap);
        let _ = writeln!(out, "epsilon {:e}", self.epsilon);
        let groups: Vec<String> = self.groups.iter().map(|g| g.to_string()).collect();
        let _ = writeln!(out, "groups {}", groups.join(" "));
        let _ = writeln!(out, "J0 {:e}", self.j0());
        for (t, slot) in self.slots.iter().enumerate() {
            for (idx, d) in slot.iter().enumerate() {
                let r: Vec<String> = self.space.state(idx).iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "t {t} r {} J {:e} dur {:e} act {}", r.join(","), d.value, d.duration, d.action);
            }
        }
    }

    /// Parses the output of [`PolicyTable::write_dump`].
    pub fn parse_dump(text: &str) -> Result<(PolicyKind, PolicyTable)> {
        let bad = |line: &str| Error::validation(format!("malformed policy dump line: {line:?}"));
        let mut header: BTreeMap<&str, &str> = BTreeMap::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with("t ") {
                rows.push(line);
            } else {
                let (k, v) = line.split_once(' ').ok_or_else(|| bad(line))?;
                header.insert(k, v);
            }
        }
        let get = |k: &str| header.get(k).copied().ok_or_else(|| Error::validation(format!("policy dump lacks {k}")));
        let num = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| bad(k)) };
        let kind: PolicyKind = get("kind")?.parse()?;
        let n = num("users")? as usize;
        let m = num("m")? as u32;
        let r_max = num("rmax")? as u32;
        let x_cap = num("xcap")? as u32;
        let epsilon: f64 = get("epsilon")?.parse().map_err(|_| bad("epsilon"))?;
        let groups = get("groups")?.split_whitespace().map(parse_group).collect::<Result<Vec<_>>>()?;
        let space = StateSpace::new(n, m, usize::MAX)?;
        let mut slots: Vec<Vec<Option<Decision>>> = vec![vec![None; space.len()]; r_max as usize + 1];
        for line in rows {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 10
                || toks[0] != "t"
                || toks[2] != "r"
                || toks[4] != "J"
                || toks[6] != "dur"
                || toks[8] != "act"
            {
                return Err(bad(line));
            }
            let t: usize = toks[1].parse().map_err(|_| bad(line))?;
            let r = toks[3]
                .split(',')
                .map(|x| x.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad(line))?;
            if t > r_max as usize || !space.contains(&r) {
                return Err(bad(line));
            }
            let value: f64 = toks[5].parse().map_err(|_| bad(line))?;
            let duration: f64 = toks[7].parse().map_err(|_| bad(line))?;
            let mut beams = Vec::new();
            if toks[9] != "-" {
                for tok in &toks[9..] {
                    beams.push(parse_beam(tok).ok_or_else(|| bad(line))?);
                }
            }
            slots[t][space.index(&r)] = Some(Decision { action: ActionSet::new(beams), value, duration });
        }
        let slots = slots
            .into_iter()
            .enumerate()
            .map(|(t, slot)| {
                slot.into_iter()
                    .enumerate()
                    .map(|(i, d)| {
                        d.ok_or_else(|| Error::Lookup(format!("policy dump misses t={t} r={:?}", space.state(i))))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let terminal =
            (0..space.len()).map(|i| epsilon * space.state(i).iter().filter(|&&x| x > 0).count() as f64).collect();
        Ok((kind, PolicyTable { space, r_max, x_cap, epsilon, groups, slots, terminal }))
    }
}

fn parse_group(tok: &str) -> Result<UserSet> {
    let inner = tok
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| Error::validation(format!("bad group {tok:?}")))?;
    inner
        .split(',')
        .map(|id| match id.parse::<usize>() {
            Ok(id) if (1..=UserSet::MAX_USERS).contains(&id) => Ok(id - 1),
            _ => Err(Error::validation(format!("bad group {tok:?}"))),
        })
        .collect()
}

fn parse_beam(tok: &str) -> Option<BeamAction> {
    let mut parts = tok.split(':');
    let group = parse_group(parts.next()?).ok()?;
    let packets = parts.next()?.strip_prefix("x=")?.parse().ok()?;
    let scheme = parts.next()?.strip_prefix("M=")?.parse().ok()?;
    parts.next().is_none().then_some(BeamAction { group, packets, scheme })
}

/// Relative tolerance under which two costs are considered tied.
const TIE_TOLERANCE: f64 = 1e-12;

pub(crate) fn nearly_equal(a: f64, b: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()))
}

/// `(cost, duration)` ordering used by the argmin; earlier enumeration
/// (lexicographically smaller action vector) wins remaining ties.
fn improves(cost: f64, duration: f64, best_cost: f64, best_duration: f64) -> bool {
    if nearly_equal(cost, best_cost) {
        duration < best_duration && !nearly_equal(duration, best_duration)
    } else {
        cost < best_cost
    }
}

#[derive(Debug, Clone, Copy)]
struct BeamOption {
    packets: u32,
    scheme: usize,
    duration: f64,
}

/// One candidate beam as seen from a particular state.
struct ActiveBeam {
    candidate: usize,
    options: Vec<BeamOption>,
    /// `pmfs[o]`: Binomial law of packets received under option `o`.
    pmfs: Vec<Vec<f64>>,
    /// `shift[y][l]`: local state reached from local state `l` after the
    /// members receive `y` packets.
    shift: Vec<Vec<usize>>,
}

/// Sub-box `{r' <= r}` reachable from a state, with its own dense indexing.
struct LocalBox {
    dims: Vec<u32>,
    strides: Vec<usize>,
    to_global: Vec<usize>,
}

impl LocalBox {
    fn new(space: &StateSpace, r: &[u32]) -> Self {
        let n = r.len();
        let dims: Vec<u32> = r.iter().map(|&x| x + 1).collect();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1] as usize;
        }
        let size = strides[0] * dims[0] as usize;
        let to_global = (0..size)
            .map(|l| {
                let c = Self::coords_of(&strides, &dims, l);
                space.index(&c)
            })
            .collect();
        LocalBox { dims, strides, to_global }
    }

    fn coords_of(strides: &[usize], dims: &[u32], mut l: usize) -> Vec<u32> {
        strides
            .iter()
            .zip(dims)
            .map(|(&s, _)| {
                let d = l / s;
                l %= s;
                d as u32
            })
            .collect()
    }

    fn len(&self) -> usize {
        self.to_global.len()
    }

    fn shifted(&self, group: UserSet, y: u32) -> Vec<usize> {
        (0..self.len())
            .map(|l| {
                let mut c = Self::coords_of(&self.strides, &self.dims, l);
                for i in group.iter() {
                    c[i] = c[i].saturating_sub(y);
                }
                c.iter().zip(&self.strides).map(|(&x, &s)| x as usize * s).sum()
            })
            .collect()
    }
}

struct Search<'a> {
    beams: &'a [ActiveBeam],
    last_weights: Vec<Vec<f64>>,
    best_cost: f64,
    best_duration: f64,
    best_choice: Vec<usize>,
    choice: Vec<usize>,
}

impl Search<'_> {
    fn run(&mut self, level: usize, pmf: &[f64], duration: f64) {
        let beam = &self.beams[level];
        let last = level + 1 == self.beams.len();
        for (o, opt) in beam.options.iter().enumerate() {
            let dur = duration + opt.duration;
            // expected future cost is non-negative
            if dur > self.best_cost && !nearly_equal(dur, self.best_cost) {
                continue;
            }
            self.choice[level] = o;
            if last {
                let future: f64 = pmf.iter().zip(&self.last_weights[o]).map(|(a, b)| a * b).sum();
                let cost = dur + future;
                if improves(cost, dur, self.best_cost, self.best_duration) {
                    self.best_cost = cost;
                    self.best_duration = dur;
                    self.best_choice.clone_from(&self.choice);
                }
            } else {
                let mut next = vec![0.0; pmf.len()];
                for (y, &py) in beam.pmfs[o].iter().enumerate() {
                    if py == 0.0 {
                        continue;
                    }
                    let shift = &beam.shift[y.min(beam.shift.len() - 1)];
                    for (l, &w) in pmf.iter().enumerate() {
                        if w != 0.0 {
                            next[shift[l]] += w * py;
                        }
                    }
                }
                self.run(level + 1, &next, dur);
            }
        }
    }
}

fn beam_options(x_cap: u32, durations: &[f64]) -> Vec<BeamOption> {
    let mut opts = vec![BeamOption { packets: 0, scheme: 0, duration: 0.0 }];
    for x in 1..=x_cap {
        for (scheme, &d) in durations.iter().enumerate() {
            opts.push(BeamOption { packets: x, scheme, duration: x as f64 * d });
        }
    }
    opts
}

fn solve_state(problem: &ExactProblem, space: &StateSpace, r: &[u32], next: &[f64], budget: u64) -> Result<Decision> {
    let pending: UserSet = r.iter().enumerate().filter(|(_, &x)| x > 0).map(|(i, _)| i).collect();
    let active: Vec<usize> =
        (0..problem.candidates.len()).filter(|&c| problem.candidates[c].group.intersects(pending)).collect();
    if active.is_empty() {
        return Ok(Decision { action: ActionSet::empty(), value: next[space.index(r)], duration: 0.0 });
    }
    let options = beam_options(problem.x_cap, &problem.durations);
    let count = (options.len() as u64).checked_pow(active.len() as u32).unwrap_or(u64::MAX);
    if count > budget {
        return Err(Error::capacity(format!(
            "{count} joint actions per state exceed the enumeration budget of {budget}; use the hierarchical solver"
        )));
    }

    let bx = LocalBox::new(space, r);
    let max_r = r.iter().copied().max().unwrap_or(0);
    let beams: Vec<ActiveBeam> = active
        .iter()
        .map(|&c| {
            let cand = &problem.candidates[c];
            let pmfs = options.iter().map(|o| receive_pmf(o.packets, cand.p_dec[o.scheme])).collect();
            let shift = (0..=max_r).map(|y| bx.shifted(cand.group, y)).collect();
            ActiveBeam { candidate: c, options: options.clone(), pmfs, shift }
        })
        .collect();

    // expected next value after the last beam, per option and local state
    let tail = beams.last().expect("at least one active beam");
    let last_weights = tail
        .pmfs
        .iter()
        .map(|pmf| {
            (0..bx.len())
                .map(|l| {
                    pmf.iter()
                        .enumerate()
                        .map(|(y, &py)| py * next[bx.to_global[tail.shift[y.min(max_r as usize)][l]]])
                        .sum()
                })
                .collect()
        })
        .collect();

    let mut start = vec![0.0; bx.len()];
    start[bx.len() - 1] = 1.0;
    let mut search = Search {
        beams: &beams,
        last_weights,
        best_cost: f64::INFINITY,
        best_duration: f64::INFINITY,
        best_choice: vec![0; beams.len()],
        choice: vec![0; beams.len()],
    };
    search.run(0, &start, 0.0);

    let action = ActionSet::new(
        beams
            .iter()
            .zip(&search.best_choice)
            .map(|(b, &o)| BeamAction {
                group: problem.candidates[b.candidate].group,
                packets: b.options[o].packets,
                scheme: b.options[o].scheme,
            })
            .collect(),
    );
    Ok(Decision { action, value: search.best_cost, duration: search.best_duration })
}

/// Backward value iteration from `t = r_max` down to `t = 0`.
pub fn value_iteration(problem: &ExactProblem, opts: &ExactOptions) -> Result<PolicyTable> {
    problem.validate()?;
    if problem.n_users > opts.max_users && !opts.allow_large {
        return Err(Error::capacity(format!(
            "exact solver refuses {} users (limit {}); use the hierarchical solver or override",
            problem.n_users, opts.max_users
        )));
    }
    let space = StateSpace::new(problem.n_users, problem.m, opts.state_cap)?;
    let terminal: Vec<f64> = (0..space.len()).map(|i| problem.terminal_cost(&space.state(i))).collect();

    let mut slots: Vec<Vec<Decision>> = Vec::with_capacity(problem.r_max as usize + 1);
    let mut next = terminal.clone();
    for _t in (0..=problem.r_max).rev() {
        let decisions = (0..space.len())
            .into_par_iter()
            .map(|i| solve_state(problem, &space, &space.state(i), &next, opts.action_budget))
            .collect::<Result<Vec<_>>>()?;
        next = decisions.iter().map(|d| d.value).collect();
        slots.push(decisions);
    }
    slots.reverse();
    Ok(PolicyTable {
        space,
        r_max: problem.r_max,
        x_cap: problem.x_cap,
        epsilon: problem.epsilon,
        groups: problem.candidates.iter().map(|c| c.group).collect(),
        slots,
        terminal,
    })
}

/// Exact optimal policy over a joint state table.
#[derive(Debug, Clone)]
pub struct ExactPolicy {
    pub table: PolicyTable,
    links: Arc<LinkTable>,
}

impl ExactPolicy {
    pub fn solve(problem: &ExactProblem, links: Arc<LinkTable>, opts: &ExactOptions) -> Result<Self> {
        Ok(ExactPolicy { table: value_iteration(problem, opts)?, links })
    }

    pub fn from_table(table: PolicyTable, links: Arc<LinkTable>) -> Self {
        ExactPolicy { table, links }
    }
}

impl Policy for ExactPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Exact
    }

    fn n_users(&self) -> usize {
        self.table.space.n_users()
    }

    fn m(&self) -> u32 {
        self.table.space.m()
    }

    fn r_max(&self) -> u32 {
        self.table.r_max
    }

    fn links(&self) -> &LinkTable {
        &self.links
    }

    fn expected_cost(&self) -> f64 {
        self.table.j0()
    }

    fn actions(&self, residuals: &[u32], t: u32) -> Result<ActionSet> {
        Ok(self.table.decision(t, residuals)?.action.clone())
    }

    fn dump(&self) -> String {
        let mut out = String::new();
        self.table.write_dump(&mut out, PolicyKind::Exact);
        out
    }
}
