//! Solver outputs checked against brute-force search on small instances.

mod common;

use std::sync::Arc;

use beamcast::baseline::{BroadcastPolicy, UnicastPolicy};
use beamcast::hierarchy::{build_tree, solve_tree, TreeSolver};
use beamcast::mdp::{value_iteration, ExactOptions, ExactProblem};
use beamcast::phy::{User, UserSet};
use beamcast::{LinkTable, Policy, Scenario};

use common::{close, expectimax, synthetic_links, Model};

fn small_two_user(m: u32, r_max: u32) -> Scenario {
    Scenario::two_user().with_protocol(m, r_max)
}

fn three_user(m: u32, r_max: u32) -> Scenario {
    let mut s = Scenario::two_user().with_protocol(m, r_max);
    s.users.push(User::new(3, 65.0, 20.0));
    s.name = "threeuser".into();
    s
}

fn exact_j0(s: &Scenario, links: &LinkTable, groups: &[UserSet], eps: f64) -> f64 {
    let p = ExactProblem::new(s.n_users(), s.m, s.r_max, s.x_cap, eps, links, groups).unwrap();
    value_iteration(&p, &ExactOptions::default()).unwrap().j0()
}

#[test]
fn unicast_is_the_sum_of_single_user_searches() {
    let s = small_two_user(2, 1);
    let links = Arc::new(LinkTable::build(&s, UserSet::all_groups(2)).unwrap());
    for eps in [1e-5, 6e-5, 4e-4] {
        let uni = UnicastPolicy::solve(&s, links.clone(), eps).unwrap();
        let mut total = 0.0;
        for i in 0..2 {
            let one = Model {
                n: 1,
                m: s.m,
                r_max: s.r_max,
                x_cap: s.x_cap,
                eps,
                durations: links.durations.clone(),
                groups: vec![(vec![0], links.get(UserSet::singleton(i)).unwrap().worst.clone())],
            };
            let j = expectimax(&one, &one.initial(), 0);
            assert!(close(uni.user_cost(i), j, 1e-10), "user {i}: {} vs {j}", uni.user_cost(i));
            total += j;
        }
        assert!(close(uni.expected_cost(), total, 1e-10));
    }
}

#[test]
fn broadcast_is_a_search_over_the_wide_beam_only() {
    let s = small_two_user(2, 1);
    let links = Arc::new(LinkTable::build(&s, UserSet::all_groups(2)).unwrap());
    for eps in [1e-5, 6e-5, 4e-4] {
        let bc = BroadcastPolicy::solve(&s, links.clone(), eps).unwrap();
        let model = Model {
            n: 2,
            m: s.m,
            r_max: s.r_max,
            x_cap: s.x_cap,
            eps,
            durations: links.durations.clone(),
            groups: vec![(vec![0, 1], links.get(UserSet::all(2)).unwrap().worst.clone())],
        };
        let j = expectimax(&model, &model.initial(), 0);
        assert!(close(bc.expected_cost(), j, 1e-10), "{} vs {j}", bc.expected_cost());
    }
}

#[test]
fn single_user_tree_matches_unicast() {
    let mut s = Scenario::two_user();
    s.users.truncate(1);
    let links = Arc::new(LinkTable::build(&s, UserSet::all_groups(1)).unwrap());
    for eps in [1e-5, 1e-4, 1e-3, 1e-2] {
        let h = solve_tree(&s, links.clone(), eps).unwrap().expected_cost();
        let u = UnicastPolicy::solve(&s, links.clone(), eps).unwrap().expected_cost();
        assert!(close(h, u, 1e-12), "eps {eps}: {h} vs {u}");
    }
}

#[test]
fn tree_never_beats_the_exact_optimum() {
    let s = small_two_user(3, 1);
    let links = Arc::new(LinkTable::build(&s, UserSet::all_groups(2)).unwrap());
    for eps in [5e-6, 3e-5, 1e-4, 5e-4, 3e-3] {
        let exact = exact_j0(&s, &links, &UserSet::all_groups(2), eps);
        let tree = solve_tree(&s, links.clone(), eps).unwrap().expected_cost();
        assert!(exact <= tree + 1e-12, "eps {eps}: exact {exact} tree {tree}");
    }
}

#[test]
fn tree_is_no_better_than_exact_on_its_own_beams() {
    let s = three_user(2, 1);
    let root = build_tree(&s).unwrap();
    let groups = root.groups();
    assert_eq!(groups.len(), 5);
    let links = Arc::new(LinkTable::build(&s, groups.iter().copied()).unwrap());
    for eps in [1e-5, 1e-4, 1e-3] {
        let exact = exact_j0(&s, &links, &groups, eps);
        let tree = solve_tree(&s, links.clone(), eps).unwrap().expected_cost();
        assert!(exact <= tree + 1e-12, "eps {eps}: exact {exact} tree {tree}");
    }
}

#[test]
fn exact_matches_search_on_three_users() {
    let groups = UserSet::all_groups(3);
    // real links, one slot
    let mut s = three_user(1, 0);
    s.x_cap = 1;
    let real = LinkTable::build(&s, groups.iter().copied()).unwrap();
    // one scheme, two slots, probabilities falling with beam width
    let mut s2 = three_user(1, 1);
    s2.x_cap = 1;
    let synth = synthetic_links(3, |g| 0.9 - 0.2 * g.len() as f64, vec![1.0]);
    for (s, links, eps_list) in [(&s, &real, [2e-5, 2e-4]), (&s2, &synth, [0.5, 4.0])] {
        for eps in eps_list {
            let j = exact_j0(s, links, &groups, eps);
            let model = Model::from_links(3, 1, s.r_max, 1, eps, links, &groups);
            let r = expectimax(&model, &model.initial(), 0);
            assert!(close(j, r, 1e-10), "eps {eps}: {j} vs {r}");
        }
    }
}

#[test]
fn tree_on_a_perfect_channel_sends_m_packets_once() {
    let s = small_two_user(3, 0);
    let root = build_tree(&s).unwrap();
    let links = Arc::new(synthetic_links(2, |_| 1.0, vec![2.0, 1.0]));
    let policy = TreeSolver::new(root, &links, 3, 0, 6, 100.0).unwrap().solve(links.clone()).unwrap();
    // the shared beam with the fast scheme, nothing else
    assert!(close(policy.expected_cost(), 3.0, 1e-12));
    let a = policy.actions(&[3, 3], 0).unwrap();
    assert_eq!(a.beams.len(), 1);
    assert_eq!((a.beams[0].group, a.beams[0].packets, a.beams[0].scheme), (UserSet::all(2), 3, 1));
}

#[test]
fn all_policies_idle_without_a_penalty() {
    let s = Scenario::two_user();
    let links = Arc::new(LinkTable::build(&s, UserSet::all_groups(2)).unwrap());
    let policies: Vec<Box<dyn Policy>> = vec![
        Box::new(solve_tree(&s, links.clone(), 0.0).unwrap()),
        Box::new(UnicastPolicy::solve(&s, links.clone(), 0.0).unwrap()),
        Box::new(BroadcastPolicy::solve(&s, links.clone(), 0.0).unwrap()),
    ];
    for p in policies {
        assert_eq!(p.expected_cost(), 0.0, "{}", p.kind());
        assert!(p.actions(&[5, 5], 0).unwrap().is_empty());
    }
}

#[test]
fn exact_on_singleton_beams_is_unicast() {
    let s = small_two_user(3, 2);
    let links = Arc::new(LinkTable::build(&s, UserSet::all_groups(2)).unwrap());
    let singles = [UserSet::singleton(0), UserSet::singleton(1)];
    for eps in [1e-5, 1e-4, 1e-3] {
        let exact = exact_j0(&s, &links, &singles, eps);
        let uni = UnicastPolicy::solve(&s, links.clone(), eps).unwrap().expected_cost();
        assert!(close(exact, uni, 1e-12), "eps {eps}: {exact} vs {uni}");
    }
}

#[test]
fn exact_cost_rises_with_the_penalty() {
    let s = small_two_user(2, 1);
    let links = Arc::new(LinkTable::build(&s, UserSet::all_groups(2)).unwrap());
    let grid = beamcast::sweep::log_grid(1e-6, 1e-2, 25);
    let costs: Vec<f64> = grid.iter().map(|&e| exact_j0(&s, &links, &UserSet::all_groups(2), e)).collect();
    assert!(costs.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
    assert!(costs.iter().zip(&grid).all(|(j, e)| *j <= 2.0 * e * (1.0 + 1e-12)));
}
