//! Tree-structured approximation of the joint MDP.
//!
//! Users are arranged in a tree whose leaves are single users and whose
//! internal nodes are multicast beams over the union of their children.
//! Each node tracks one aggregate state, the largest residual demand among
//! its children, and acts with a tuple `(a_1, .., a_p, x, M)`: a packet
//! budget per child subtree plus its own beam's packet count and scheme.
//!
//! Tables are solved backward in time and bottom-up in the tree. For a node
//! at aggregate state `r`, every child is assumed to sit at `r` as well; a
//! child's table row `(r, a)` gives the law of its next aggregate state and
//! the airtime spent in its subtree when its whole subtree is capped at `a`
//! packets per beam. The node's own beam then delivers a single Binomial
//! draw to all of its members.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::link::LinkTable;
use crate::mdp::{nearly_equal, receive_pmf};
use crate::phy::{self, BeamGroup, PhyParams, User, UserSet};
use crate::policy::{ActionSet, BeamAction, Policy, PolicyKind};
use crate::scenario::{Scenario, TreeSpec, TreeSpecNode};

/// A node of the beam hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub beam: BeamGroup,
    pub children: Vec<TreeNode>,
    pub leaf_count: usize,
}

impl TreeNode {
    pub fn members(&self) -> UserSet {
        self.beam.members
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Member sets of every node, in pre-order.
    pub fn groups(&self) -> Vec<UserSet> {
        let mut out = vec![self.members()];
        for c in &self.children {
            out.extend(c.groups());
        }
        out
    }

    pub fn internal_groups(&self) -> Vec<UserSet> {
        let mut out = Vec::new();
        if !self.is_leaf() {
            out.push(self.members());
            for c in &self.children {
                out.extend(c.internal_groups());
            }
        }
        out
    }
}

fn make_node(children: Vec<TreeNode>, users: &[User], phy: &PhyParams) -> Result<TreeNode> {
    let members = children.iter().fold(UserSet::empty(), |acc, c| acc.union(c.members()));
    Ok(TreeNode {
        beam: phy::beam_for(members, users, phy)?,
        leaf_count: children.iter().map(|c| c.leaf_count).sum(),
        children,
    })
}

fn make_leaf(index: usize, users: &[User], phy: &PhyParams) -> Result<TreeNode> {
    Ok(TreeNode { beam: phy::beam_for(UserSet::singleton(index), users, phy)?, children: Vec::new(), leaf_count: 1 })
}

fn binary(ids: &[usize], users: &[User], phy: &PhyParams) -> Result<TreeNode> {
    if ids.len() == 1 {
        return make_leaf(ids[0], users, phy);
    }
    let mid = ids.len().div_ceil(2);
    let children = vec![binary(&ids[..mid], users, phy)?, binary(&ids[mid..], users, phy)?];
    make_node(children, users, phy)
}

fn nested(node: &TreeSpecNode, users: &[User], phy: &PhyParams) -> Result<TreeNode> {
    match node {
        TreeSpecNode::User(id) => {
            if *id == 0 || *id > users.len() {
                return Err(Error::validation(format!("tree: unknown user id {id}")));
            }
            make_leaf(id - 1, users, phy)
        }
        TreeSpecNode::Group(items) if items.len() == 1 => nested(&items[0], users, phy),
        TreeSpecNode::Group(items) => {
            let children = items.iter().map(|c| nested(c, users, phy)).collect::<Result<Vec<_>>>()?;
            make_node(children, users, phy)
        }
    }
}

/// Builds the beam hierarchy described by `spec`.
pub fn build_tree_with(spec: &TreeSpec, users: &[User], phy: &PhyParams) -> Result<TreeNode> {
    if users.is_empty() {
        return Err(Error::validation("tree: no users"));
    }
    match spec {
        TreeSpec::BinaryIndexOrder => {
            let ids: Vec<usize> = (0..users.len()).collect();
            binary(&ids, users, phy)
        }
        TreeSpec::Nested(children) => {
            crate::scenario::validate_partition(children, users.len())?;
            nested(&TreeSpecNode::Group(children.clone()), users, phy)
        }
    }
}

pub fn build_tree(scenario: &Scenario) -> Result<TreeNode> {
    build_tree_with(&scenario.tree, &scenario.users, &scenario.phy)
}

/// Aggregate state of a node: the worst (largest) child residual.
/// An empty list aggregates to 0.
pub fn aggregate(children_residuals: &[u32]) -> u32 {
    children_residuals.iter().copied().max().unwrap_or(0)
}

#[derive(Debug, Clone)]
struct FlatNode {
    members: UserSet,
    children: Vec<usize>,
    leaf_count: usize,
    height: usize,
}

/// Post-order flattening: children precede parents, the root is last.
#[derive(Debug, Clone)]
struct FlatTree {
    nodes: Vec<FlatNode>,
}

impl FlatTree {
    fn from_node(root: &TreeNode) -> Self {
        fn walk(n: &TreeNode, out: &mut Vec<FlatNode>) -> usize {
            let children: Vec<usize> = n.children.iter().map(|c| walk(c, out)).collect();
            let height = children.iter().map(|&c| out[c].height + 1).max().unwrap_or(0);
            out.push(FlatNode { members: n.members(), children, leaf_count: n.leaf_count, height });
            out.len() - 1
        }
        let mut nodes = Vec::new();
        walk(root, &mut nodes);
        FlatTree { nodes }
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    fn find(&self, members: UserSet) -> Option<usize> {
        self.nodes.iter().position(|n| n.members == members)
    }
}

/// The tuple chosen by a node for one `(slot, state, budget)` cell, with
/// the induced one-slot law of the node's aggregate state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecision {
    /// One budget per child, in child order.
    pub budgets: Vec<u32>,
    pub packets: u32,
    pub scheme: usize,
    /// Probability of each next aggregate state `0..=m`.
    pub kernel: Vec<f64>,
    /// Airtime spent in the node's subtree during the slot.
    pub duration: f64,
    /// Subtree airtime plus the expected cost-to-go of the node.
    pub cost: f64,
}

impl NodeDecision {
    fn idle(m: u32, state: u32, children: usize, cost: f64) -> Self {
        let mut kernel = vec![0.0; m as usize + 1];
        kernel[state as usize] = 1.0;
        NodeDecision { budgets: vec![0; children], packets: 0, scheme: 0, kernel, duration: 0.0, cost }
    }
}

/// `rows[r][a]` of one slot.
type SlotTable = Vec<Vec<NodeDecision>>;

#[derive(Debug, Clone)]
struct NodeTable {
    slots: Vec<Option<SlotTable>>,
    terminal: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct MenuEntry<'a> {
    budget: u32,
    decision: &'a NodeDecision,
}

#[derive(Debug, Clone, Copy)]
struct BeamOption {
    packets: u32,
    scheme: usize,
    duration: f64,
}

/// Largest number of tuples a single node may enumerate per state.
pub const TUPLE_BUDGET: u64 = 50_000_000;

/// Backward, bottom-up solver over the tree's reduced chains.
#[derive(Debug, Clone)]
pub struct TreeSolver {
    root: TreeNode,
    tree: FlatTree,
    /// `[node][scheme]` worst-user decode probability of the node's beam.
    p_dec: Vec<Vec<f64>>,
    durations: Vec<f64>,
    m: u32,
    r_max: u32,
    x_cap: u32,
    epsilon: f64,
    tables: Vec<NodeTable>,
}

impl TreeSolver {
    pub fn new(root: TreeNode, links: &LinkTable, m: u32, r_max: u32, x_cap: u32, epsilon: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::validation("m must be at least 1"));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::validation(format!("epsilon must be finite and non-negative, got {epsilon}")));
        }
        let tree = FlatTree::from_node(&root);
        let p_dec =
            tree.nodes.iter().map(|n| links.get(n.members).map(|l| l.worst.clone())).collect::<Result<Vec<_>>>()?;
        let tables = tree
            .nodes
            .iter()
            .map(|n| NodeTable {
                slots: vec![None; r_max as usize + 1],
                terminal: (0..=m).map(|r| if r > 0 { epsilon * n.leaf_count as f64 } else { 0.0 }).collect(),
            })
            .collect();
        Ok(TreeSolver { root, tree, p_dec, durations: links.durations.clone(), m, r_max, x_cap, epsilon, tables })
    }

    fn options(&self) -> Vec<BeamOption> {
        let mut opts = vec![BeamOption { packets: 0, scheme: 0, duration: 0.0 }];
        for x in 1..=self.x_cap {
            for (scheme, &d) in self.durations.iter().enumerate() {
                opts.push(BeamOption { packets: x, scheme, duration: x as f64 * d });
            }
        }
        opts
    }

    fn node_index(&self, members: UserSet) -> Result<usize> {
        self.tree.find(members).ok_or_else(|| Error::Lookup(format!("{members} is not a node of the tree")))
    }

    /// `J^node_{t}` over aggregate states; `t = r_max + 1` is the terminal penalty.
    fn values(&self, node: usize, t: u32) -> Result<Vec<f64>> {
        let table = &self.tables[node];
        if t == self.r_max + 1 {
            return Ok(table.terminal.clone());
        }
        let slot = table.slots.get(t as usize).and_then(|s| s.as_ref()).ok_or_else(|| {
            Error::Sequencing(format!("node {} has no solution for slot {t}", self.tree.nodes[node].members))
        })?;
        Ok(slot.iter().map(|row| row[self.x_cap as usize].cost).collect())
    }

    fn child_slot(&self, child: usize, t: u32) -> Result<&SlotTable> {
        self.tables[child].slots.get(t as usize).and_then(|s| s.as_ref()).ok_or_else(|| {
            Error::Sequencing(format!(
                "child {} must be solved for slot {t} before its parent",
                self.tree.nodes[child].members
            ))
        })
    }

    /// Child decisions the node may combine in slot `t` at state `r`, by
    /// increasing budget. A budget whose decision repeats a smaller
    /// budget's is dropped: it could never be preferred.
    fn menu(&self, child: usize, r: u32, t: u32) -> Result<Vec<MenuEntry<'_>>> {
        let row = &self.child_slot(child, t)?[r as usize];
        let mut out: Vec<MenuEntry<'_>> = Vec::new();
        for (a, d) in row.iter().enumerate() {
            if !out.iter().any(|e| e.decision.duration == d.duration && e.decision.kernel == d.kernel) {
                out.push(MenuEntry { budget: a as u32, decision: d });
            }
        }
        Ok(out)
    }

    /// Decisions of `node` at aggregate state `r` in slot `t`, one per budget `0..=x_cap`.
    fn solve_row(&self, node: usize, r: u32, t: u32) -> Result<Vec<NodeDecision>> {
        let info = &self.tree.nodes[node];
        let next = self.values(node, t + 1)?;
        let menus = info.children.iter().map(|&c| self.menu(c, r, t)).collect::<Result<Vec<_>>>()?;
        let p = info.children.len();
        let budgets = self.x_cap as usize + 1;
        if r == 0 {
            return Ok((0..budgets).map(|_| NodeDecision::idle(self.m, 0, p, next[0])).collect());
        }
        let options = self.options();
        let combos = menus.iter().fold(1u64, |acc, m| acc.saturating_mul(m.len() as u64));
        if combos.saturating_mul(options.len() as u64) > TUPLE_BUDGET {
            return Err(Error::capacity(format!(
                "node {} with {p} children needs {combos} child combinations; use a tree with fewer children per node",
                info.members
            )));
        }
        let ru = r as usize;
        // own beam: P(r' | u) for u <= r
        let beam_law: Vec<Vec<Vec<f64>>> = options
            .iter()
            .map(|o| {
                let pmf = receive_pmf(o.packets, self.p_dec[node][o.scheme]);
                (0..=ru)
                    .map(|u| {
                        let mut row = vec![0.0; ru + 1];
                        for (y, &py) in pmf.iter().enumerate() {
                            row[u.saturating_sub(y)] += py;
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        let beam_value: Vec<Vec<f64>> = beam_law
            .iter()
            .map(|rows| rows.iter().map(|row| row.iter().zip(&next).map(|(a, b)| a * b).sum()).collect())
            .collect();

        // law of the largest child state after the children act
        let children_law = |combo: &[usize], law: &mut [f64]| -> f64 {
            if p == 0 {
                law.iter_mut().for_each(|x| *x = 0.0);
                law[ru] = 1.0;
                return 0.0;
            }
            let mut duration = 0.0;
            let mut cdf = vec![1.0; ru + 1];
            for (menu, &i) in menus.iter().zip(combo) {
                let d = menu[i].decision;
                duration += d.duration;
                let mut acc = 0.0;
                for (u, c) in cdf.iter_mut().enumerate() {
                    acc += d.kernel[u];
                    *c *= acc.min(1.0);
                }
            }
            let mut prev = 0.0;
            for (u, &c) in cdf.iter().enumerate() {
                law[u] = (c - prev).max(0.0);
                prev = c;
            }
            duration
        };

        // best (cost, duration, combo, option) per largest budget component
        #[derive(Clone)]
        struct Best {
            cost: f64,
            duration: f64,
            combo: Vec<usize>,
            option: usize,
        }
        fn better(a: &Best, b: &Best) -> bool {
            if !nearly_equal(a.cost, b.cost) {
                return a.cost < b.cost;
            }
            if !nearly_equal(a.duration, b.duration) {
                return a.duration < b.duration;
            }
            (&a.combo, a.option) < (&b.combo, b.option)
        }
        let mut buckets: Vec<Option<Best>> = vec![None; budgets];
        let mut combo = vec![0usize; p];
        let mut u_pmf = vec![0.0; ru + 1];
        'combos: loop {
            let child_duration = children_law(&combo, &mut u_pmf);
            let combo_max = menus.iter().zip(&combo).map(|(m, &i)| m[i].budget).max().unwrap_or(0);
            for (o, opt) in options.iter().enumerate() {
                let future: f64 = u_pmf.iter().zip(&beam_value[o]).map(|(a, b)| a * b).sum();
                let cand = Best {
                    cost: child_duration + opt.duration + future,
                    duration: child_duration + opt.duration,
                    combo: combo.clone(),
                    option: o,
                };
                let key = combo_max.max(opt.packets) as usize;
                match &buckets[key] {
                    Some(b) if !better(&cand, b) => {}
                    _ => buckets[key] = Some(cand),
                }
            }
            // next combination in lexicographic order
            for k in (0..p).rev() {
                if combo[k] + 1 < menus[k].len() {
                    combo[k] += 1;
                    combo[k + 1..].iter_mut().for_each(|x| *x = 0);
                    continue 'combos;
                }
            }
            break;
        }

        let mut out = Vec::with_capacity(budgets);
        let mut running: Option<Best> = None;
        for bucket in buckets {
            if let Some(b) = bucket {
                if running.as_ref().is_none_or(|cur| better(&b, cur)) {
                    running = Some(b);
                }
            }
            let best = running.as_ref().expect("the all-zero tuple is always feasible");
            let opt = options[best.option];
            let mut u_law = vec![0.0; ru + 1];
            children_law(&best.combo, &mut u_law);
            let mut kernel = vec![0.0; self.m as usize + 1];
            for (u, &pu) in u_law.iter().enumerate() {
                for (r2, &q) in beam_law[best.option][u].iter().enumerate() {
                    kernel[r2] += pu * q;
                }
            }
            out.push(NodeDecision {
                budgets: menus.iter().zip(&best.combo).map(|(m, &i)| m[i].budget).collect(),
                packets: opt.packets,
                scheme: opt.scheme,
                kernel,
                duration: best.duration,
                cost: best.cost,
            });
        }
        Ok(out)
    }

    /// One reduced-chain step of the node covering `members`: the tuple it
    /// picks at aggregate state `r` in slot `t` when every packet count in
    /// its subtree is capped at `budget`.
    ///
    /// Requires the node's slot `t + 1` and its children's slot `t` to be solved.
    pub fn child_step(&self, members: UserSet, r: u32, budget: u32, t: u32) -> Result<NodeDecision> {
        let node = self.node_index(members)?;
        if r > self.m || budget > self.x_cap || t > self.r_max {
            return Err(Error::Lookup(format!("cell (t={t}, r={r}, a={budget}) outside the table")));
        }
        let mut row = self.solve_row(node, r, t)?;
        Ok(row.swap_remove(budget as usize))
    }

    /// Solves every node for slot `t`, lowest nodes first; nodes of equal
    /// height are independent.
    pub fn solve_slot(&mut self, t: u32) -> Result<()> {
        let max_height = self.tree.nodes.iter().map(|n| n.height).max().unwrap_or(0);
        for h in 0..=max_height {
            let level: Vec<usize> = (0..self.tree.nodes.len()).filter(|&i| self.tree.nodes[i].height == h).collect();
            let solved = level
                .par_iter()
                .map(|&node| (0..=self.m).map(|r| self.solve_row(node, r, t)).collect::<Result<SlotTable>>())
                .collect::<Result<Vec<_>>>()?;
            for (node, table) in level.into_iter().zip(solved) {
                self.tables[node].slots[t as usize] = Some(table);
            }
        }
        Ok(())
    }

    pub fn solve(mut self, links: Arc<LinkTable>) -> Result<HierarchicalPolicy> {
        for t in (0..=self.r_max).rev() {
            self.solve_slot(t)?;
        }
        let tables = self
            .tables
            .into_iter()
            .map(|nt| nt.slots.into_iter().map(|s| s.expect("every slot solved")).collect::<Vec<_>>())
            .collect();
        Ok(HierarchicalPolicy {
            root: self.root,
            tree: self.tree,
            tables,
            links,
            m: self.m,
            r_max: self.r_max,
            x_cap: self.x_cap,
            epsilon: self.epsilon,
        })
    }
}

/// Builds the scenario's tree and solves it for penalty `epsilon`.
pub fn solve_tree(scenario: &Scenario, links: Arc<LinkTable>, epsilon: f64) -> Result<HierarchicalPolicy> {
    let root = build_tree(scenario)?;
    TreeSolver::new(root, &links, scenario.m, scenario.r_max, scenario.x_cap, epsilon)?.solve(links)
}

/// Solved hierarchical policy: per node, slot, aggregate state and budget.
#[derive(Debug, Clone)]
pub struct HierarchicalPolicy {
    root: TreeNode,
    tree: FlatTree,
    /// `tables[node][t][r][a]`.
    tables: Vec<Vec<SlotTable>>,
    links: Arc<LinkTable>,
    m: u32,
    r_max: u32,
    x_cap: u32,
    epsilon: f64,
}

impl HierarchicalPolicy {
    pub fn tree(&self) -> &TreeNode {
        &self.root
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Decision of the node covering `members` in cell `(t, r, budget)`.
    pub fn decision(&self, members: UserSet, t: u32, r: u32, budget: u32) -> Result<&NodeDecision> {
        let node =
            self.tree.find(members).ok_or_else(|| Error::Lookup(format!("{members} is not a node of the tree")))?;
        self.cell(node, t, r, budget)
    }

    fn cell(&self, node: usize, t: u32, r: u32, budget: u32) -> Result<&NodeDecision> {
        self.tables[node]
            .get(t as usize)
            .and_then(|slot| slot.get(r as usize))
            .and_then(|row| row.get(budget as usize))
            .ok_or_else(|| Error::Lookup(format!("cell (t={t}, r={r}, a={budget}) outside the table")))
    }

    /// Node cost-to-go `J^node_t(r)` with an unconstrained budget.
    pub fn value(&self, members: UserSet, t: u32, r: u32) -> Result<f64> {
        if t == self.r_max + 1 {
            let node =
                self.tree.find(members).ok_or_else(|| Error::Lookup(format!("{members} is not a node of the tree")))?;
            return Ok(if r > 0 { self.epsilon * self.tree.nodes[node].leaf_count as f64 } else { 0.0 });
        }
        self.decision(members, t, r, self.x_cap).map(|d| d.cost)
    }

    /// Aggregate state of every node (post-order) for the given residuals.
    pub fn aggregate_states(&self, residuals: &[u32]) -> Vec<u32> {
        let mut agg = vec![0; self.tree.nodes.len()];
        for (i, node) in self.tree.nodes.iter().enumerate() {
            agg[i] = if node.children.is_empty() {
                let user = node.members.iter().next().expect("leaf has one member");
                residuals[user]
            } else {
                aggregate(&node.children.iter().map(|&c| agg[c]).collect::<Vec<_>>())
            };
        }
        agg
    }

    /// Flat set of beams for slot `t`: the root decides with an open budget
    /// and each node passes its per-child budgets down.
    pub fn execute(&self, residuals: &[u32], t: u32) -> Result<ActionSet> {
        let n = self.root.members().len();
        if residuals.len() != n || residuals.iter().any(|&r| r > self.m) {
            return Err(Error::Lookup(format!("residuals {residuals:?} outside the policy table")));
        }
        if t > self.r_max {
            return Err(Error::Lookup(format!("slot {t} beyond the horizon")));
        }
        let agg = self.aggregate_states(residuals);
        let mut beams = Vec::new();
        let mut stack = vec![(self.tree.root(), self.x_cap)];
        while let Some((node, budget)) = stack.pop() {
            let d = self.cell(node, t, agg[node], budget)?;
            if d.packets > 0 {
                beams.push(BeamAction { group: self.tree.nodes[node].members, packets: d.packets, scheme: d.scheme });
            }
            for (&c, &a) in self.tree.nodes[node].children.iter().zip(&d.budgets) {
                stack.push((c, a));
            }
        }
        Ok(ActionSet::new(beams))
    }
}

fn join(xs: &[u32]) -> String {
    if xs.is_empty() {
        return "-".to_string();
    }
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Policy for HierarchicalPolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Hierarchical
    }

    fn n_users(&self) -> usize {
        self.root.members().len()
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
        self.tables[self.tree.root()][0][self.m as usize][self.x_cap as usize].cost
    }

    fn actions(&self, residuals: &[u32], t: u32) -> Result<ActionSet> {
        self.execute(residuals, t)
    }

    fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# beamcast hierarchical policy");
        let _ = writeln!(out, "kind hierarchical");
        let _ = writeln!(out, "users {}", self.n_users());
        let _ = writeln!(out, "m {}", self.m);
        let _ = writeln!(out, "rmax {}", self.r_max);
        let _ = writeln!(out, "xcap {}", self.x_cap);
        let _ = writeln!(out, "epsilon {:e}", self.epsilon);
        let _ = writeln!(out, "J0 {:e}", self.expected_cost());
        for node in &self.tree.nodes {
            let children: Vec<String> = node.children.iter().map(|&c| self.tree.nodes[c].members.to_string()).collect();
            let children = if children.is_empty() { "-".to_string() } else { children.join(" ") };
            let _ = writeln!(out, "node {} leaves {} children {children}", node.members, node.leaf_count);
        }
        for (i, node) in self.tree.nodes.iter().enumerate() {
            for (t, slot) in self.tables[i].iter().enumerate() {
                for (r, row) in slot.iter().enumerate() {
                    for (a, d) in row.iter().enumerate() {
                        let _ = writeln!(
                            out,
                            "n {} t {t} r {r} a {a} J {:e} dur {:e} budgets {} x {} M {}",
                            node.members,
                            d.cost,
                            d.duration,
                            join(&d.budgets),
                            d.packets,
                            d.scheme
                        );
                    }
                }
            }
        }
        out
    }
}
