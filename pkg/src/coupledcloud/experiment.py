"""Protection-vs-attack sweeps and their configuration files."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import IO, Callable

import numpy as np

from .cascade import run_trials
from .graph import Graph
from .immunity import CONVENTIONS, STRATEGIES, build_profile, half_edge_probabilities
from .percolation import solve_scalar
from .topology import GenConfig, generate_graph

__all__ = [
    "ConfigError",
    "SweepConfig",
    "ResultRow",
    "CONFIG_KEYS",
    "RESULT_HEADER",
    "parse_config",
    "parse_config_text",
    "run_sweep",
    "write_results",
    "selection_rng",
]

logger = logging.getLogger(__name__)

RESULT_HEADER = ["protect_frac", "attack_frac", "strategy", "mean", "std",
                 "ci95_low", "ci95_high", "solver_S", "trials", "seed"]

_SELECTION_STREAM = 0x5E1EC7


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    gen: GenConfig
    protect_fractions: tuple[float, ...] = (0.0, 0.0005, 0.05, 0.2)
    attack_fractions: tuple[float, ...] = (0.005, 0.05, 0.1)
    strategies: tuple[str, ...] = ("degree", "random")
    trials: int = 100
    C: float = 0.9
    immunity_convention: str = "paper"
    solver: bool = True
    tol: float = 1e-10
    max_iters: int = 10_000
    out: str | None = field(default=None, compare=False)

    @property
    def seed(self) -> int:
        return self.gen.seed


# key -> (default shown in --help, description); None marks a required key
CONFIG_KEYS: dict[str, tuple[str | None, str]] = {
    "hosts": (None, "number of physical hosts"),
    "vms_per_host": (None, "VMs per host (exact capacity)"),
    "seed": (None, "master seed for generation, selection and trials"),
    "s_min": ("3", "smallest sub-network size"),
    "s_max": ("500", "largest sub-network size"),
    "alpha": ("2.5", "power-law exponent of sub-network sizes"),
    "m": ("2", "preferential-attachment edges per new VM"),
    "protect_fractions": ("0, 0.0005, 0.05, 0.2", "protected-node fractions"),
    "attack_fractions": ("0.005, 0.05, 0.1", "initially attacked fractions"),
    "strategies": ("degree, random", "protected-set selection strategies"),
    "trials": ("100", "Monte Carlo trials per cell"),
    "C": ("0.9", "immunity coefficient in [0, 1]"),
    "immunity_convention": ("paper", "paper | prose"),
    "solver": ("true", "also report the message-passing giant fraction"),
    "tol": ("1e-10", "solver tolerance"),
    "max_iters": ("10000", "solver iteration cap"),
    "out": ("-", "output CSV path (overridden by --out)"),
}


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if not np.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got {raw!r}")
    return value


def _prob(key: str, raw: str) -> float:
    value = _float(key, raw)
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{key}: {value} is outside [0, 1]")
    return value


def _list(key: str, raw: str) -> list[str]:
    items = [x.strip() for x in raw.split(",")]
    if not items or any(not x for x in items):
        raise ConfigError(f"{key}: expected a non-empty comma-separated list")
    return items


def _bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected true or false, got {raw!r}")


def parse_config_text(text: str) -> SweepConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment; unknown keys are fatal."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = raw

    missing = [k for k, (default, _) in CONFIG_KEYS.items() if default is None and k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    get = lambda k: values.get(k, CONFIG_KEYS[k][0])  # noqa: E731

    try:
        gen = GenConfig(
            host_count=_int("hosts", get("hosts")),
            vms_per_host=_int("vms_per_host", get("vms_per_host")),
            s_min=_int("s_min", get("s_min")),
            s_max=_int("s_max", get("s_max")),
            alpha=_float("alpha", get("alpha")),
            m=_int("m", get("m")),
            seed=_int("seed", get("seed")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    strategies = _list("strategies", get("strategies"))
    for s in strategies:
        if s not in STRATEGIES:
            raise ConfigError(f"strategies: unknown strategy {s!r}")
    convention = get("immunity_convention")
    if convention not in CONVENTIONS:
        raise ConfigError(f"immunity_convention: must be one of {', '.join(CONVENTIONS)}")
    trials = _int("trials", get("trials"))
    if trials < 1:
        raise ConfigError("trials: must be >= 1")
    tol = _float("tol", get("tol"))
    if tol <= 0:
        raise ConfigError("tol: must be positive")
    max_iters = _int("max_iters", get("max_iters"))
    if max_iters < 1:
        raise ConfigError("max_iters: must be >= 1")
    out = get("out")
    return SweepConfig(
        gen=gen,
        protect_fractions=tuple(_prob("protect_fractions", x)
                                for x in _list("protect_fractions", get("protect_fractions"))),
        attack_fractions=tuple(_prob("attack_fractions", x)
                               for x in _list("attack_fractions", get("attack_fractions"))),
        strategies=tuple(strategies),
        trials=trials,
        C=_prob("C", get("C")),
        immunity_convention=convention,
        solver=_bool("solver", get("solver")),
        tol=tol,
        max_iters=max_iters,
        out=None if out == "-" else out,
    )


def parse_config(path) -> SweepConfig:
    return parse_config_text(Path(path).read_text())


@dataclass(frozen=True)
class ResultRow:
    protect_frac: float
    attack_frac: float
    strategy: str
    mean: float
    std: float
    ci95_low: float
    ci95_high: float
    solver_S: float | None
    trials: int
    seed: int

    def as_csv(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append("" if v is None else repr(float(v)) if isinstance(v, float) else str(v))
        return out


def selection_rng(seed: int) -> np.random.Generator:
    """Stream used to draw random protected sets; shared by every cell of a sweep."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(_SELECTION_STREAM,)))


def run_sweep(config: SweepConfig, graph: Graph | None = None,
              progress: Callable[[ResultRow], None] | None = None) -> list[ResultRow]:
    """Evaluate every (protect, attack, strategy) cell on one shared topology.

    Cells are visited in grid order and all use the same trial seeds, so cells
    are paired trial by trial. Pass ``graph`` to reuse an existing topology.
    """
    if graph is None:
        _, graph = generate_graph(config.gen)
    rows = []
    profiles = {}
    for protect in config.protect_fractions:
        for attack in config.attack_fractions:
            for strategy in config.strategies:
                try:
                    key = (protect, strategy)
                    if key not in profiles:
                        profiles[key] = build_profile(
                            graph, C=config.C, convention=config.immunity_convention,
                            protect_fraction=protect, strategy=strategy,
                            rng=selection_rng(config.seed))
                    profile = profiles[key]
                    summary = run_trials(graph, profile, attack, config.trials,
                                         config.seed).summary
                    solver_S = None
                    if config.solver:
                        probs = half_edge_probabilities(graph, profile, attack)
                        solver_S = solve_scalar(graph, probs, config.tol,
                                                config.max_iters).giant_fraction
                except Exception as exc:
                    raise RuntimeError(
                        f"cell protect={protect} attack={attack} strategy={strategy} "
                        f"failed: {exc}") from exc
                row = ResultRow(protect, attack, strategy, summary.mean, summary.std,
                                summary.ci95_low, summary.ci95_high, solver_S,
                                config.trials, config.seed)
                logger.info("cell %s", row)
                if progress is not None:
                    progress(row)
                rows.append(row)
    return rows


def write_results(rows, fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RESULT_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())
