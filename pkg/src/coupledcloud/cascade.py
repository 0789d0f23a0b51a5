"""Monte Carlo avalanche simulation.

An attack crashes a uniform sample of non-protected nodes. In every later
step each node crashed in the previous step exposes its alive, non-protected
neighbours once; an exposed node ``j`` crashes with probability
``1 - p_imu[j]``. A node exposed by several crashed neighbours draws once per
neighbour. The process stops at the first step without new crashes, and the
largest connected cluster of surviving nodes is recorded after every step.

Each trial draws its randomness up front: one permutation of the nodes (the
attack takes its first ``k`` unprotected entries) and one uniform per
half-edge (the exposure ``u -> j`` uses the variate stored at half-edge ``u <- j``;
every half-edge is used at most once). Runs that share a trial seed but differ
in protection or attack size therefore share their random numbers, which
keeps paired comparisons tight without changing any single trial's law.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from ._validation import (check_choice, check_graph, check_positive_int,
                          check_probability, round_half_up)
from .graph import Graph, largest_connected_component
from .immunity import CONVENTIONS, STRATEGIES, ImmunityProfile

__all__ = [
    "CascadeError",
    "CascadeConfig",
    "StepRecord",
    "CascadeTrace",
    "TrialSummary",
    "TrialResults",
    "trial_seed",
    "run_cascade",
    "run_trials",
    "summarize",
    "paired_sign_test",
]

_CASCADE_STREAM = 0x0CA5CADE


class CascadeError(ValueError):
    pass


@dataclass(frozen=True)
class CascadeConfig:
    attack_fraction: float = 0.005
    C: float = 0.9
    protect_fraction: float = 0.0
    protect_strategy: str = "degree"
    trials: int = 100
    master_seed: int = 0
    convention: str = "paper"

    def __post_init__(self):
        check_probability(self.attack_fraction, "attack_fraction")
        check_probability(self.C, "C")
        check_probability(self.protect_fraction, "protect_fraction")
        check_choice(self.protect_strategy, "protect_strategy", STRATEGIES)
        check_choice(self.convention, "convention", CONVENTIONS)
        check_positive_int(self.trials, "trials")


class StepRecord(NamedTuple):
    step: int
    newly_crashed: int
    lcc_size: int


@dataclass
class CascadeTrace:
    steps: list[StepRecord]
    final_alive: int
    final_lcc: int
    node_count: int

    @property
    def survived_ratio(self) -> float:
        return self.final_lcc / self.node_count if self.node_count else 0.0


@dataclass(frozen=True)
class TrialSummary:
    mean: float
    std: float
    ci95_low: float
    ci95_high: float
    trials: int


@dataclass
class TrialResults:
    traces: list[CascadeTrace]
    seeds: list[int]
    summary: TrialSummary

    @property
    def survived_ratios(self) -> np.ndarray:
        return np.array([t.survived_ratio for t in self.traces])


def trial_seed(master_seed: int, trial: int) -> int:
    """64-bit seed of trial ``trial``, a pure function of ``(master_seed, trial)``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(_CASCADE_STREAM, int(trial)))
    return int(ss.generate_state(1, np.uint64)[0])


def _outgoing_half_edges(graph: Graph, nodes: np.ndarray) -> np.ndarray:
    """CSR positions of all half-edges in the rows of ``nodes``."""
    starts = graph.indptr[nodes]
    lengths = graph.indptr[nodes + 1] - starts
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
    return offsets + np.arange(total)


def run_cascade(graph: Graph, profile: ImmunityProfile, attack_fraction: float,
                rng: np.random.Generator) -> CascadeTrace:
    """Simulate one avalanche; see the module docstring for the protocol."""
    check_graph(graph)
    attack_fraction = check_probability(attack_fraction, "attack_fraction")
    n = graph.node_count
    if profile.p_imu.shape != (n,):
        raise ValueError("immunity profile does not match the graph")
    protected = profile.protected
    candidates = np.flatnonzero(~protected)
    # A fully protected network offers no target at all.
    k = round_half_up(attack_fraction * n) if len(candidates) else 0
    if k > len(candidates):
        raise CascadeError(
            f"cannot attack {k} nodes: only {len(candidates)} are unprotected")

    alive = np.ones(n, dtype=bool)
    steps: list[StepRecord] = []
    if k > 0:
        order = rng.permutation(n)
        frontier = np.sort(order[~protected[order]][:k])
        variates = rng.random(graph.half_edge_count)
        alive[frontier] = False
        steps.append(StepRecord(0, k, largest_connected_component(graph, alive)))
        crash_prob = 1.0 - profile.p_imu
        while True:
            pos = _outgoing_half_edges(graph, frontier)
            exposed = graph.indices[pos]
            keep = alive[exposed] & ~protected[exposed]
            pos, exposed = pos[keep], exposed[keep]
            hit = exposed[variates[pos] < crash_prob[exposed]]
            frontier = np.unique(hit)
            if len(frontier) == 0:
                break
            alive[frontier] = False
            steps.append(StepRecord(len(steps), len(frontier),
                                    largest_connected_component(graph, alive)))
    final_lcc = steps[-1].lcc_size if steps else largest_connected_component(graph, alive)
    return CascadeTrace(steps, int(alive.sum()), final_lcc, n)


def summarize(ratios) -> TrialSummary:
    """Mean, sample std and Student-t 95% interval of the survived ratios."""
    ratios = np.sort(np.asarray(ratios, dtype=np.float64))
    count = len(ratios)
    if count == 0:
        raise ValueError("no trials to summarize")
    mean = float(ratios.mean())
    if count == 1:
        return TrialSummary(mean, 0.0, mean, mean, 1)
    std = float(ratios.std(ddof=1))
    half = float(stats.t.ppf(0.975, count - 1)) * std / float(np.sqrt(count))
    return TrialSummary(mean, std, mean - half, mean + half, count)


def run_trials(graph: Graph, profile: ImmunityProfile, attack_fraction: float,
               trials: int, master_seed: int = 0) -> TrialResults:
    """Independent cascades; trial ``t`` is seeded from ``(master_seed, t)`` only.

    Because the seed does not depend on the protection or attack settings,
    runs with the same ``master_seed`` are paired trial by trial.
    """
    check_positive_int(trials, "trials")
    seeds = [trial_seed(master_seed, t) for t in range(trials)]
    traces = [run_cascade(graph, profile, attack_fraction, np.random.default_rng(s))
              for s in seeds]
    summary = summarize([t.survived_ratio for t in traces])
    return TrialResults(traces, seeds, summary)


def paired_sign_test(better, worse) -> float:
    """One-sided sign test p-value for ``better > worse`` over paired samples.

    Ties are dropped. Returns 1.0 when every pair is tied.
    """
    better = np.asarray(better, dtype=np.float64)
    worse = np.asarray(worse, dtype=np.float64)
    diff = better - worse
    wins = int((diff > 0).sum())
    losses = int((diff < 0).sum())
    if wins + losses == 0:
        return 1.0
    return float(stats.binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue)
