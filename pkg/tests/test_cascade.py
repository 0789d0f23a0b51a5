import itertools

import networkx as nx
import numpy as np
import pytest

from coupledcloud.cascade import (CascadeConfig, CascadeError, paired_sign_test, run_cascade,
                                  run_trials, summarize, trial_seed)
from coupledcloud.immunity import ImmunityProfile, build_profile
from coupledcloud.topology import GenConfig, generate_graph
from helpers import path_graph, star_graph, vm_graph


def profile(n, p_imu, protected=()):
    mask = np.zeros(n, dtype=bool)
    mask[list(protected)] = True
    return ImmunityProfile(np.broadcast_to(np.asarray(p_imu, float), (n,)).copy(), mask)


def exact_mean_ratio(n, edges, p_imu, protected, k):
    """Expected final LCC / n by enumerating attack sets and every exposure outcome."""
    nbrs = {i: [] for i in range(n)}
    for u, v in edges:
        nbrs[u].append(v)
        nbrs[v].append(u)

    def lcc(alive):
        g = nx.Graph()
        g.add_nodes_from(alive)
        g.add_edges_from((u, v) for u, v in edges if u in alive and v in alive)
        return max((len(c) for c in nx.connected_components(g)), default=0)

    def expand(alive, frontier):
        exposures = [j for u in sorted(frontier) for j in nbrs[u]
                     if j in alive and j not in protected]
        if not exposures:
            return lcc(alive) / n
        total = 0.0
        seen_new = {}
        for outcome in itertools.product((0, 1), repeat=len(exposures)):
            prob = 1.0
            for j, crashed in zip(exposures, outcome):
                prob *= (1 - p_imu[j]) if crashed else p_imu[j]
            if prob == 0:
                continue
            new = frozenset(j for j, c in zip(exposures, outcome) if c)
            seen_new[new] = seen_new.get(new, 0.0) + prob
        for new, prob in seen_new.items():
            total += prob * (expand(alive - new, new) if new else lcc(alive) / n)
        return total

    candidates = [i for i in range(n) if i not in protected]
    sets = list(itertools.combinations(candidates, k))
    return sum(expand(frozenset(range(n)) - set(s), set(s)) for s in sets) / len(sets)


def test_no_attack():
    g = path_graph(10)
    tr = run_cascade(g, profile(10, 0.5), 0.0, np.random.default_rng(0))
    assert tr.steps == []
    assert tr.survived_ratio == 1.0


def test_certain_infection_floods_component():
    g = path_graph(10)
    tr = run_cascade(g, profile(10, 0.0), 0.1, np.random.default_rng(0))
    assert tr.survived_ratio == 0.0
    assert sum(s.newly_crashed for s in tr.steps) == 10


def test_total_protection():
    g = path_graph(10)
    tr = run_cascade(g, profile(10, 0.0, range(10)), 0.3, np.random.default_rng(0))
    assert tr.steps == []
    assert tr.survived_ratio == 1.0


def test_attack_exceeding_unprotected_population():
    g = path_graph(10)
    with pytest.raises(CascadeError):
        run_cascade(g, profile(10, 0.5, range(5)), 0.8, np.random.default_rng(0))


def test_protected_hub_blocks_spread():
    g = star_graph(9)
    for seed in range(20):
        tr = run_cascade(g, profile(10, 0.0, [0]), 0.1, np.random.default_rng(seed))
        assert tr.final_alive == 9
        assert tr.final_lcc == 9


def test_trace_invariants():
    _, g = generate_graph(GenConfig(host_count=100, vms_per_host=5, s_max=80, seed=1))
    prof = build_profile(g, C=0.9, convention="prose", protect_fraction=0.1)
    for seed in range(10):
        tr = run_cascade(g, prof, 0.05, np.random.default_rng(seed))
        assert all(s.newly_crashed > 0 for s in tr.steps)
        lccs = [s.lcc_size for s in tr.steps]
        assert all(b <= a for a, b in zip(lccs, lccs[1:]))
        assert [s.step for s in tr.steps] == list(range(len(tr.steps)))
        assert len(tr.steps) <= g.node_count
        assert tr.final_alive >= prof.protected.sum()
        assert 0 <= tr.survived_ratio <= 1


def test_protected_nodes_never_crash():
    _, g = generate_graph(GenConfig(host_count=50, vms_per_host=4, s_max=40, seed=2))
    prof = build_profile(g, C=1.0, convention="prose", protect_fraction=0.3)
    prof.p_imu[:] = 0.0
    for seed in range(5):
        tr = run_cascade(g, prof, 0.1, np.random.default_rng(seed))
        # every unprotected node reachable from the attack crashed; protected ones all survive
        assert tr.final_alive >= prof.protected.sum()
        assert sum(s.newly_crashed for s in tr.steps) == g.node_count - tr.final_alive


@pytest.mark.parametrize("n, edges, p_imu, protected, k", [
    (2, [(0, 1)], [0.3, 0.3], set(), 1),
    (3, [(0, 2), (1, 2)], [0.4, 0.4, 0.4], set(), 2),
    (5, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)], [0.2, 0.6, 0.5, 0.7, 0.1], {2}, 1),
    (5, [(0, 1), (0, 2), (0, 3), (0, 4)], [0.5, 0.3, 0.8, 0.6, 0.9], set(), 2),
])
def test_matches_exact_enumeration(n, edges, p_imu, protected, k):
    g = vm_graph(n, edges)
    prof = profile(n, p_imu, protected)
    expected = exact_mean_ratio(n, edges, p_imu, protected, k)
    res = run_trials(g, prof, k / n, 6000, master_seed=3)
    sigma = max(res.summary.std, 1e-3) / np.sqrt(6000)
    assert abs(res.summary.mean - expected) < 4.5 * sigma + 1e-9


def test_two_node_closed_form():
    # Survivor probability p_imu, then the LCC is 1 of 2 nodes.
    assert exact_mean_ratio(2, [(0, 1)], [0.3, 0.3], set(), 1) == pytest.approx(0.15)


def test_single_trial_summary():
    g = path_graph(20)
    res = run_trials(g, profile(20, 0.5), 0.1, 1, master_seed=5)
    assert res.summary.mean == res.traces[0].survived_ratio
    assert res.summary.std == 0.0
    assert res.summary.ci95_low == res.summary.ci95_high == res.summary.mean


def test_trials_are_deterministic():
    _, g = generate_graph(GenConfig(host_count=50, vms_per_host=4, s_max=40, seed=2))
    prof = build_profile(g, C=0.9, convention="prose")
    a = run_trials(g, prof, 0.05, 20, master_seed=9)
    b = run_trials(g, prof, 0.05, 20, master_seed=9)
    assert a.summary == b.summary
    assert a.seeds == b.seeds
    assert run_trials(g, prof, 0.05, 20, master_seed=10).seeds != a.seeds


def test_trial_seed_is_pure():
    assert trial_seed(1, 4) == trial_seed(1, 4)
    assert len({trial_seed(1, t) for t in range(200)}) == 200


def test_summary_interval_brackets_mean():
    s = summarize([0.1, 0.4, 0.2, 0.9])
    assert s.ci95_low <= s.mean <= s.ci95_high
    assert s.std == pytest.approx(np.std([0.1, 0.4, 0.2, 0.9], ddof=1))


@pytest.fixture(scope="module")
def medium_graph():
    return generate_graph(GenConfig(host_count=400, vms_per_host=5, s_max=200, seed=4))[1]


def test_more_attack_lowers_survival(medium_graph):
    prof = build_profile(medium_graph, C=0.9)
    low = run_trials(medium_graph, prof, 0.005, 100, master_seed=1)
    high = run_trials(medium_graph, prof, 0.05, 100, master_seed=1)
    assert high.summary.mean <= low.summary.mean


def test_protection_and_strategy_orderings(medium_graph):
    g = medium_graph
    ratios = {}
    for frac in (0.0, 0.05, 0.2):
        for strategy in ("degree", "random"):
            prof = build_profile(g, C=0.9, convention="prose", protect_fraction=frac,
                                 strategy=strategy, rng=np.random.default_rng(0))
            ratios[frac, strategy] = run_trials(g, prof, 0.05, 100, 2).survived_ratios
    assert paired_sign_test(ratios[0.05, "degree"], ratios[0.0, "degree"]) < 0.05
    assert paired_sign_test(ratios[0.2, "degree"], ratios[0.05, "degree"]) < 0.05
    for frac in (0.05, 0.2):
        assert paired_sign_test(ratios[frac, "degree"], ratios[frac, "random"]) < 0.05


def test_sign_test_edges():
    assert paired_sign_test([1, 1], [1, 1]) == 1.0
    assert paired_sign_test(np.ones(10), np.zeros(10)) == pytest.approx(0.5 ** 10)


def test_config_validation():
    with pytest.raises(ValueError):
        CascadeConfig(attack_fraction=1.5)
    with pytest.raises(ValueError):
        CascadeConfig(trials=0)
    with pytest.raises(ValueError):
        CascadeConfig(protect_strategy="betweenness")
