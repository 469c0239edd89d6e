"""Quick end-to-end check of the Python bindings.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import math

import beamcast_py as bc


def main():
    assert bc.tx_gain(bc.TWO_PI, 0.05) == 1.0
    psi = math.radians(10.0)
    g = bc.tx_gain(psi, 0.05)
    assert abs(g * psi + 0.05 * (bc.TWO_PI - psi) - bc.TWO_PI) < 1e-12

    s = bc.Scenario.two_user()
    assert s.n_users == 2 and (s.m, s.r_max) == (5, 2)
    durations = s.packet_durations()
    assert len(durations) == len(s.schemes) and all(d > 0 for d in durations)
    probs = s.decode_probs([0, 1])
    assert all(0.0 <= p <= 1.0 for row in probs for p in row)

    eps = bc.default_epsilons(s)[6]
    costs = {}
    for kind in ("exact", "hierarchical", "unicast", "broadcast"):
        policy = bc.solve(s, eps, policy=kind)
        costs[kind] = policy.expected_cost
        stats = policy.simulate(runs=20_000, seed=3)
        assert abs(stats["mean_cost"] - policy.expected_cost) < 4 * stats["se_cost"] + 1e-15, (kind, stats)
    assert costs["exact"] <= costs["hierarchical"] + 1e-12
    assert costs["hierarchical"] <= min(costs["unicast"], costs["broadcast"]) + 1e-12

    beams = bc.solve(s, eps).actions([5, 5], 0)
    assert all(isinstance(members, list) and packets > 0 for members, packets, _ in beams)

    rows = bc.sweep(s, policy="unicast", epsilons=[1e-5, 1e-4], runs=2000)
    assert [r["epsilon"] for r in rows] == [1e-5, 1e-4]
    assert rows == bc.sweep(s, policy="unicast", epsilons=[1e-5, 1e-4], runs=2000)

    try:
        bc.solve(bc.Scenario.table1(), 1e-4, policy="exact")
    except bc.CapacityError:
        pass
    else:
        raise AssertionError("exact solve on eight users should be refused")

    try:
        bc.solve(s, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative penalty should be rejected")

    print("python smoke test passed:", {k: f"{v:.4e}" for k, v in costs.items()})


if __name__ == "__main__":
    main()
