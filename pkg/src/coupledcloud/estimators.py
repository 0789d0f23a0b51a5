"""scikit-learn style wrappers around the functional API.

Each estimator takes a :class:`~coupledcloud.graph.Graph` as ``X``. Parameters
are plain constructor arguments, so ``get_params``/``set_params``/``clone``
work as usual; fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_choice, check_graph, check_positive_int, check_probability
from .cascade import run_trials
from .experiment import selection_rng
from .immunity import CONVENTIONS, STRATEGIES, build_profile, half_edge_probabilities
from .percolation import node_marginals, solve_scalar

__all__ = ["ImmunityModel", "PercolationSolver", "CascadeSimulator"]


class _ProtectionParams:
    def _validate_protection(self):
        check_probability(self.C, "C")
        check_probability(self.protect_fraction, "protect_fraction")
        check_choice(self.immunity_convention, "immunity_convention", CONVENTIONS)
        check_choice(self.protect_strategy, "protect_strategy", STRATEGIES)

    def _profile(self, graph, eta):
        return build_profile(graph, C=self.C, convention=self.immunity_convention,
                             protect_fraction=self.protect_fraction,
                             strategy=self.protect_strategy,
                             rng=selection_rng(self.random_state), eta=eta)

    def _check_same_graph(self, X):
        check_is_fitted(self)
        X = check_graph(X)
        if X.node_count != self.n_nodes_:
            raise ValueError(f"X has {X.node_count} nodes, fitted graph had {self.n_nodes_}")
        return X


class ImmunityModel(_ProtectionParams, TransformerMixin, BaseEstimator):
    """Immunity probabilities and protected set; transforms a graph into half-edge probabilities.

    Parameters
    ----------
    eta : float
        Initially removed fraction used by :meth:`transform`.
    C : float
        Immunity coefficient.
    immunity_convention : {"paper", "prose"}
    protect_fraction : float
        Fraction of nodes placed in the protected set.
    protect_strategy : {"degree", "random"}
    random_state : int
        Seed of the stream drawing random protected sets.
    """

    def __init__(self, eta=0.0, C=0.9, immunity_convention="paper", protect_fraction=0.0,
                 protect_strategy="degree", random_state=0):
        self.eta = eta
        self.C = C
        self.immunity_convention = immunity_convention
        self.protect_fraction = protect_fraction
        self.protect_strategy = protect_strategy
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_graph(X)
        self._validate_protection()
        check_probability(self.eta, "eta")
        self.profile_ = self._profile(X, self.eta)
        self.p_imu_ = self.profile_.p_imu
        self.protected_set_ = self.profile_.protected_set
        self.n_nodes_ = X.node_count
        return self

    def transform(self, X):
        X = self._check_same_graph(X)
        return half_edge_probabilities(X, self.profile_, self.eta)


class PercolationSolver(_ProtectionParams, BaseEstimator):
    """Giant-component fraction by message passing.

    After ``fit``: ``h_`` (messages per half-edge), ``giant_fraction_``,
    ``n_iter_``, ``residual_`` and ``profile_``.
    """

    def __init__(self, eta=0.0, C=0.9, immunity_convention="paper", protect_fraction=0.0,
                 protect_strategy="degree", tol=1e-10, max_iter=10_000, random_state=0):
        self.eta = eta
        self.C = C
        self.immunity_convention = immunity_convention
        self.protect_fraction = protect_fraction
        self.protect_strategy = protect_strategy
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_graph(X)
        self._validate_protection()
        check_probability(self.eta, "eta")
        check_positive_int(self.max_iter, "max_iter")
        self.profile_ = self._profile(X, self.eta)
        sol = solve_scalar(X, half_edge_probabilities(X, self.profile_, self.eta),
                           self.tol, self.max_iter)
        self.h_ = sol.h
        self.giant_fraction_ = sol.giant_fraction
        self.n_iter_ = sol.iterations
        self.residual_ = sol.residual
        self.n_nodes_ = X.node_count
        return self

    def predict_proba(self, X):
        """Per-node probability of belonging to the percolating cluster."""
        X = self._check_same_graph(X)
        return node_marginals(X, self.h_)

    def score(self, X, y=None):
        self._check_same_graph(X)
        return self.giant_fraction_


class CascadeSimulator(_ProtectionParams, BaseEstimator):
    """Monte Carlo avalanches; ``score`` is the mean survived ratio.

    After ``fit``: ``traces_``, ``survived_ratios_``, ``summary_``, ``profile_``.
    """

    def __init__(self, attack_fraction=0.005, C=0.9, immunity_convention="paper",
                 protect_fraction=0.0, protect_strategy="degree", trials=100, random_state=0):
        self.attack_fraction = attack_fraction
        self.C = C
        self.immunity_convention = immunity_convention
        self.protect_fraction = protect_fraction
        self.protect_strategy = protect_strategy
        self.trials = trials
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_graph(X)
        self._validate_protection()
        check_probability(self.attack_fraction, "attack_fraction")
        check_positive_int(self.trials, "trials")
        self.profile_ = self._profile(X, self.attack_fraction)
        results = run_trials(X, self.profile_, self.attack_fraction, self.trials,
                             self.random_state)
        self.traces_ = results.traces
        self.seeds_ = results.seeds
        self.survived_ratios_ = np.asarray(results.survived_ratios)
        self.summary_ = results.summary
        self.n_nodes_ = X.node_count
        return self

    def score(self, X, y=None):
        self._check_same_graph(X)
        return self.summary_.mean
