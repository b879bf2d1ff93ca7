"""Ground-truthed synthetic data: two nonlinear toy systems and random linear VARs.

System "s1" has seven equations with maximum lag 1; "s2" has maximum lag 2.
Both mix linear and nonlinear cross- and auto-dependencies plus pure-noise
variables, with coefficients drawn uniformly once per run. Taking the first
n_vars equations truncates the systems for variable-count sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from causa.core import CausalGraph, LaggedEdge, LagWindow, TimeSeriesDataset

BURN_IN = 100
_SATURATION = 1e6
_DEN_FLOOR = 1e-3


@dataclass(frozen=True)
class ToySystemSpec:
    system: str = "s1"
    n_vars: int = 7
    n_samples: int = 1500
    coeff_range: tuple[float, float] | None = None
    noise_range: tuple[float, float] = (0.0, 1.0)
    seed: int = 0
    extra_noise_vars: int = 0

    def __post_init__(self):
        if self.system not in ("s1", "s2"):
            raise ValueError(f"unknown system {self.system!r}")
        if not (3 <= self.n_vars <= 7):
            raise ValueError(f"n_vars must be in [3,7], got {self.n_vars}")
        if self.n_samples < 50:
            raise ValueError(f"n_samples must be >= 50, got {self.n_samples}")
        if self.extra_noise_vars < 0:
            raise ValueError("extra_noise_vars must be >= 0")
        cr = self.coeff_range
        if cr is None:
            cr = (0.0, 1.0) if self.system == "s1" else (0.0, 10.0)
        if not (cr[0] < cr[1]) or not (self.noise_range[0] < self.noise_range[1]):
            raise ValueError("coefficient and noise ranges must be nonempty")
        object.__setattr__(self, "coeff_range", (float(cr[0]), float(cr[1])))

    @property
    def window(self) -> LagWindow:
        return LagWindow(1, 1 if self.system == "s1" else 2)


@dataclass(frozen=True)
class GroundTruth:
    graph: CausalGraph
    coefficients: dict[tuple[str, int, str], float] = field(default_factory=dict)


def _sat(v: float) -> float:
    return min(max(v, -_SATURATION), _SATURATION)


def _den(v: float) -> float:
    # Keep denominators away from zero, preserving sign.
    if abs(v) >= _DEN_FLOOR:
        return v
    return _DEN_FLOOR if v >= 0 else -_DEN_FLOOR


# Structural edges of each full system: (source idx, lag, target idx, coeff name).
_S1_EDGES = [
    (0, 1, 0, "c00"),
    (1, 1, 0, "c01"),
    (2, 1, 0, "c02"),
    (1, 1, 2, "c21"),
    (2, 1, 2, "c22"),
    (3, 1, 3, "c33"),
    (1, 1, 4, "c41"),
    (2, 1, 4, "c42"),
    (3, 1, 4, "c43"),
    (0, 1, 6, "c60"),
    (5, 1, 6, "c65"),
]
_S1_COEFFS = ["c00", "c01", "c02", "c21", "c22", "c33", "c41", "c42", "c43", "c60", "c65"]

_S2_EDGES = [
    (1, 2, 0, "c01"),
    (2, 1, 0, "c02"),
    (1, 2, 2, "c21"),
    (3, 1, 3, "c33"),
    (2, 2, 4, "c42"),
    (3, 1, 4, "c43"),
    (0, 1, 5, "c50"),
    (5, 2, 5, "c55"),
]
_S2_COEFFS = ["c01", "c02", "c21", "c33", "c42", "c43", "c50", "c55"]


def _step_s1(prev: np.ndarray, c: dict[str, float], e: np.ndarray, n: int) -> np.ndarray:
    out = np.empty(n)
    out[0] = c["c00"] * prev[0] - c["c01"] * prev[1] * c["c02"] * prev[2] + e[0]
    out[1] = e[1]
    out[2] = c["c21"] * prev[1] / _den(1.0 + c["c22"] * prev[2]) + e[2]
    if n > 3:
        out[3] = c["c33"] + math.sqrt(max(prev[3], 0.0)) + e[3]
    if n > 4:
        out[4] = (
            c["c41"] * prev[1] * c["c42"] * prev[2] / _den(1.0 + c["c43"] * prev[3])
            + e[4]
        )
    if n > 5:
        out[5] = e[5]
    if n > 6:
        out[6] = c["c60"] * prev[0] / _den(1.0 + c["c65"] * prev[5]) + e[6]
    return np.clip(out[:n], -_SATURATION, _SATURATION)


def _step_s2(
    prev1: np.ndarray, prev2: np.ndarray, c: dict[str, float], e: np.ndarray, n: int
) -> np.ndarray:
    out = np.empty(n)
    out[0] = c["c01"] * prev2[1] * c["c02"] * prev1[2] + e[0]
    out[1] = e[1]
    out[2] = c["c21"] * prev2[1] ** 2 + e[2]
    if n > 3:
        out[3] = c["c33"] + prev1[3] + e[3]
    if n > 4:
        out[4] = c["c42"] * prev2[2] - c["c43"] * prev1[3] + e[4]
    if n > 5:
        out[5] = c["c50"] * prev1[0] / _den(1.0 + c["c55"] * prev2[5]) + e[5]
    if n > 6:
        out[6] = e[6]
    return np.clip(out[:n], -_SATURATION, _SATURATION)


def simulate_toy_raw(spec: ToySystemSpec, n_steps: int) -> tuple[np.ndarray, dict[str, float]]:
    """Simulate the system without burn-in removal or centering.

    Returns the full (n_steps x n_vars) trajectory and the realized
    coefficients. Exposed separately so stability can be checked directly.
    """
    rng = np.random.default_rng(spec.seed)
    names = _S1_COEFFS if spec.system == "s1" else _S2_COEFFS
    lo, hi = spec.coeff_range
    coeffs = {name: float(rng.uniform(lo, hi)) for name in names}
    n = spec.n_vars
    maxlag = spec.window.tau_max
    nlo, nhi = spec.noise_range
    values = np.empty((n_steps, n))
    values[:maxlag] = rng.uniform(nlo, nhi, size=(maxlag, n))
    noise = rng.uniform(nlo, nhi, size=(n_steps, n))
    for t in range(maxlag, n_steps):
        if spec.system == "s1":
            values[t] = _step_s1(values[t - 1], coeffs, noise[t], n)
        else:
            values[t] = _step_s2(values[t - 1], values[t - 2], coeffs, noise[t], n)
        if not np.all(np.isfinite(values[t])):
            bad = int(np.argwhere(~np.isfinite(values[t]))[0])
            raise OverflowError(f"non-finite value at step {t}, variable x{bad}")
    return values, coeffs


def generate_toy(spec: ToySystemSpec) -> tuple[TimeSeriesDataset, GroundTruth]:
    """Simulate the chosen toy system and return it with its ground truth.

    Discards the first BURN_IN samples, appends `extra_noise_vars` isolated
    noise columns, and mean-centers every column. Deterministic per seed.
    """
    values, coeffs = simulate_toy_raw(spec, spec.n_samples + BURN_IN)
    values = values[BURN_IN:]
    rng = np.random.default_rng((spec.seed, 0xE015E))
    names = [f"x{i}" for i in range(spec.n_vars)]
    if spec.extra_noise_vars:
        nlo, nhi = spec.noise_range
        extra = rng.uniform(nlo, nhi, size=(spec.n_samples, spec.extra_noise_vars))
        values = np.hstack([values, extra])
        names += [f"x{spec.n_vars + i}" for i in range(spec.extra_noise_vars)]
    values = values - values.mean(axis=0)
    data = TimeSeriesDataset(tuple(names), values)

    raw_edges = _S1_EDGES if spec.system == "s1" else _S2_EDGES
    edges = []
    realized = {}
    for src, lag, tgt, cname in raw_edges:
        if src < spec.n_vars and tgt < spec.n_vars:
            edges.append(LaggedEdge(f"x{src}", lag, f"x{tgt}"))
            realized[(f"x{src}", lag, f"x{tgt}")] = coeffs[cname]
    graph = CausalGraph(frozenset(names), frozenset(edges), spec.window, 0.05)
    return data, GroundTruth(graph, realized)


def generate_var(
    n_vars: int,
    n_samples: int,
    density: float,
    coeff_range: tuple[float, float],
    window: LagWindow,
    seed: int = 0,
    noise_std: float = 1.0,
) -> tuple[TimeSeriesDataset, GroundTruth]:
    """Random stable linear Gaussian VAR with known lagged edges.

    Edge slots (source, lag, target) are kept with probability `density`;
    coefficients are redrawn from `coeff_range` (magnitude, random sign)
    until the companion matrix is stable, up to 1000 retries.
    """
    if not (0.0 <= density <= 1.0):
        raise ValueError("density must be in [0,1]")
    if n_vars < 1 or n_samples < 10:
        raise ValueError("need n_vars >= 1 and n_samples >= 10")
    rng = np.random.default_rng(seed)
    lags = list(window.lags)
    slots = [
        (i, lag, j)
        for j in range(n_vars)
        for lag in lags
        for i in range(n_vars)
    ]
    chosen = [s for s in slots if rng.random() < density]

    L = window.tau_max
    lo, hi = coeff_range
    for _ in range(1000):
        coeff = np.zeros((L, n_vars, n_vars))  # coeff[lag-1, target, source]
        realized = {}
        for i, lag, j in chosen:
            c = float(rng.uniform(lo, hi)) * (1.0 if rng.random() < 0.5 else -1.0)
            coeff[lag - 1, j, i] = c
            realized[(f"x{i}", lag, f"x{j}")] = c
        if not chosen:
            break
        companion = np.zeros((n_vars * L, n_vars * L))
        companion[:n_vars, :] = np.hstack([coeff[k] for k in range(L)])
        if L > 1:
            companion[n_vars:, : n_vars * (L - 1)] = np.eye(n_vars * (L - 1))
        radius = np.max(np.abs(np.linalg.eigvals(companion)))
        if radius < 0.97:
            break
    else:
        raise RuntimeError("no stable coefficient draw within 1000 retries")

    total = n_samples + BURN_IN
    values = np.zeros((total, n_vars))
    noise = rng.normal(0.0, noise_std, size=(total, n_vars))
    values[:L] = noise[:L]
    for t in range(L, total):
        acc = noise[t].copy()
        for k in range(L):
            acc += coeff[k] @ values[t - 1 - k]
        values[t] = acc
    values = values[BURN_IN:]
    names = tuple(f"x{i}" for i in range(n_vars))
    data = TimeSeriesDataset(names, values - values.mean(axis=0))
    edges = frozenset(
        LaggedEdge(s, lag, t) for (s, lag, t) in realized
    )
    graph = CausalGraph(frozenset(names), edges, window, 0.05)
    return data, GroundTruth(graph, realized)
