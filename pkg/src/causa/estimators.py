"""Dependence estimation and significance testing.

Conditional mutual information is the single computational primitive: the
filter's truncated transfer-entropy score and the lag-specific MCI statistic
are both CMIs over finite lag blocks. Two estimators share one interface —
a closed-form Gaussian (linear) one with an analytic chi-square p-value, and
a Kraskov-style nearest-neighbor one that requires circular-shift surrogates
for significance. All values are in nats.

Covariance sufficient statistics are cached per (dataset, alignment depth),
so analytic tests cost a few small log-determinants each.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from weakref import WeakKeyDictionary

import numpy as np
from scipy.special import chdtrc, digamma
from sklearn.neighbors import KDTree

from causa.core import LagWindow, ParentSet, TimeSeriesDataset

_RIDGE = 1e-10


class DegenerateDataError(RuntimeError):
    """Estimation impossible: constant columns, singular covariance or too few samples."""


VarLag = tuple[str, int]


@dataclass(frozen=True)
class EstimatorConfig:
    kind: str = "gaussian"
    knn_k: int = 4
    surrogates: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "knn"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")
        if self.surrogates < 0:
            raise ValueError("surrogates must be >= 0")
        if self.kind == "knn" and self.surrogates < 1:
            raise ValueError("knn estimator has no analytic p-value; set surrogates >= 1")

    @property
    def analytic(self) -> bool:
        return self.kind == "gaussian" and self.surrogates == 0


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    dof_or_surrogates: int

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p_value out of [0,1]: {self.p_value}")


@dataclass(frozen=True)
class CmiQuery:
    """CMI I(X;Y|Z) over lagged variable blocks of one dataset.

    `align_depth` is the number of leading samples dropped so every block
    shares one index range; it defaults to the window's tau_max and is
    raised to 2*tau_max by the MCI statistic, whose shifted source-parents
    reach further back.
    """

    x_vars: tuple[VarLag, ...]
    y_vars: tuple[VarLag, ...]
    z_vars: tuple[VarLag, ...]
    data: TimeSeriesDataset
    window: LagWindow
    align_depth: int | None = None

    def __post_init__(self):
        x = tuple(self.x_vars)
        y = tuple(self.y_vars)
        z = tuple(self.z_vars)
        object.__setattr__(self, "x_vars", x)
        object.__setattr__(self, "y_vars", y)
        object.__setattr__(self, "z_vars", z)
        if not x or not y:
            raise ValueError("x and y blocks must be nonempty")
        sx, sy, sz = set(x), set(y), set(z)
        if sx & sy or sx & sz or sy & sz:
            raise ValueError("x, y, z must be pairwise disjoint (var, lag) sets")
        depth = self.window.tau_max if self.align_depth is None else self.align_depth
        object.__setattr__(self, "align_depth", depth)
        for var, lag in x + y + z:
            if not (0 <= lag <= depth):
                raise ValueError(f"lag {lag} of {var!r} outside [0, {depth}]")

    @property
    def t_eff(self) -> int:
        return self.data.n_samples - self.align_depth


# Per-dataset cache of aligned lag matrices, their covariance and the
# zero-variance column set, keyed by alignment depth. Read-only once built.
_SUFFSTATS: WeakKeyDictionary = WeakKeyDictionary()


@dataclass
class _SuffStats:
    index: dict[VarLag, int]
    names: list[VarLag]
    matrix: np.ndarray
    cov: np.ndarray       # raw covariance
    cov_r: np.ndarray     # ridged once, shared by all analytic queries
    bad: frozenset[int]   # zero-variance column positions
    t_eff: int


def _suffstats(data: TimeSeriesDataset, depth: int) -> _SuffStats:
    per_dataset = _SUFFSTATS.setdefault(data, {})
    stats = per_dataset.get(depth)
    if stats is None:
        T = data.n_samples
        if depth >= T - 1:
            raise DegenerateDataError(
                f"alignment depth {depth} leaves fewer than 2 of {T} samples"
            )
        cols = []
        index: dict[VarLag, int] = {}
        for j, var in enumerate(data.var_names):
            for lag in range(depth + 1):
                index[(var, lag)] = len(cols)
                cols.append(data.values[depth - lag : T - lag, j])
        matrix = np.column_stack(cols)
        cov = np.atleast_2d(np.cov(matrix, rowvar=False, ddof=0))
        diag = np.diag(cov)
        bad = frozenset(np.flatnonzero(diag <= 0.0).tolist())
        ridge = _RIDGE * (np.trace(cov) / cov.shape[0])
        cov_r = cov + ridge * np.eye(cov.shape[0])
        stats = _SuffStats(
            index=index,
            names=list(index),
            matrix=matrix,
            cov=cov,
            cov_r=cov_r,
            bad=bad,
            t_eff=T - depth,
        )
        per_dataset[depth] = stats
    return stats


def _check_columns(stats: _SuffStats, idx: list[int]) -> None:
    if stats.bad:
        hit = [stats.names[i] for i in idx if i in stats.bad]
        if hit:
            raise DegenerateDataError(f"zero-variance columns: {hit}")


def _logdet(cov_r: np.ndarray, idx: list[int]) -> float:
    if not idx:
        return 0.0
    sign, ld = np.linalg.slogdet(cov_r[np.ix_(idx, idx)])
    if sign <= 0 or not np.isfinite(ld):
        raise DegenerateDataError("singular covariance after ridge fallback")
    return ld


def _cmi_from_suffstats(
    stats: _SuffStats, ix: list[int], iy: list[int], iz: list[int]
) -> float:
    _check_columns(stats, ix + iy + iz)
    c = stats.cov_r
    try:
        return 0.5 * (
            _logdet(c, ix + iz)
            + _logdet(c, iy + iz)
            - _logdet(c, iz)
            - _logdet(c, ix + iy + iz)
        )
    except DegenerateDataError:
        names = [stats.names[i] for i in ix + iy + iz]
        raise DegenerateDataError(
            f"singular covariance for columns {names} (after ridge fallback)"
        ) from None


def _require_samples(stats: _SuffStats, dim: int) -> None:
    if stats.t_eff <= dim + 2:
        raise DegenerateDataError(
            f"T_eff={stats.t_eff} too small for {dim}-dimensional query"
        )


def _gaussian_cmi_from_cov(cov: np.ndarray, nx: int, ny: int, nz: int) -> float:
    """CMI of jointly Gaussian blocks [X | Y | Z] from their raw covariance."""
    d = cov.shape[0]
    c = cov + _RIDGE * (np.trace(cov) / d) * np.eye(d)
    ix = list(range(nx))
    iy = list(range(nx, nx + ny))
    iz = list(range(nx + ny, nx + ny + nz))
    return 0.5 * (
        _logdet(c, ix + iz) + _logdet(c, iy + iz) - _logdet(c, iz) - _logdet(c, ix + iy + iz)
    )


def _blocks(query: CmiQuery) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    stats = _suffstats(query.data, query.align_depth)

    def block(pairs):
        if not pairs:
            return np.empty((stats.matrix.shape[0], 0))
        return stats.matrix[:, [stats.index[p] for p in pairs]]

    return block(query.x_vars), block(query.y_vars), block(query.z_vars)


def _cmi_of_blocks(
    X: np.ndarray, Y: np.ndarray, Z: np.ndarray, config: EstimatorConfig
) -> float:
    if config.kind == "gaussian":
        joint = np.hstack([X, Y, Z])
        cov = np.atleast_2d(np.cov(joint, rowvar=False, ddof=0))
        return _gaussian_cmi_from_cov(cov, X.shape[1], Y.shape[1], Z.shape[1])
    return _knn_cmi(X, Y, Z, config.knn_k)


def _knn_cmi(X: np.ndarray, Y: np.ndarray, Z: np.ndarray, k: int) -> float:
    """Kraskov/Frenzel-Pompe nearest-neighbor CMI with max-norm balls."""
    n = X.shape[0]
    if k >= n:
        raise DegenerateDataError(f"knn_k={k} requires more than {n} samples")
    joint = np.hstack([X, Y, Z])
    dist, _ = KDTree(joint, metric="chebyshev").query(joint, k=k + 1)
    # Strictly-inside counts: shrink the radius just below the kth distance.
    eps = np.maximum(dist[:, -1] - 1e-12, 0.0)

    def count(A: np.ndarray) -> np.ndarray:
        tree = KDTree(A, metric="chebyshev")
        return tree.query_radius(A, r=eps, count_only=True) - 1

    if Z.shape[1] == 0:
        nx = count(X)
        ny = count(Y)
        return float(
            digamma(k) + digamma(n) - np.mean(digamma(nx + 1) + digamma(ny + 1))
        )
    nxz = count(np.hstack([X, Z]))
    nyz = count(np.hstack([Y, Z]))
    nz = count(Z)
    return float(
        digamma(k) + np.mean(digamma(nz + 1) - digamma(nxz + 1) - digamma(nyz + 1))
    )


def _cmi_raw(query: CmiQuery, config: EstimatorConfig) -> float:
    stats = _suffstats(query.data, query.align_depth)
    dim = len(query.x_vars) + len(query.y_vars) + len(query.z_vars)
    _require_samples(stats, dim)
    if config.kind == "gaussian":
        ix = [stats.index[p] for p in query.x_vars]
        iy = [stats.index[p] for p in query.y_vars]
        iz = [stats.index[p] for p in query.z_vars]
        return _cmi_from_suffstats(stats, ix, iy, iz)
    X, Y, Z = _blocks(query)
    _check_columns(stats, [stats.index[p] for p in query.x_vars + query.y_vars + query.z_vars])
    return _knn_cmi(X, Y, Z, config.knn_k)


def estimate_cmi(query: CmiQuery, config: EstimatorConfig) -> float:
    """Estimated I(X;Y|Z) in nats, clamped to >= 0 for reporting."""
    return max(_cmi_raw(query, config), 0.0)


_TEST_COUNT = 0


def test_count() -> int:
    """Number of dependence tests run in this process (diagnostic counter)."""
    return _TEST_COUNT


def _query_rng(query: CmiQuery, config: EstimatorConfig) -> np.random.Generator:
    # Stream derived from (seed, query fingerprint): results independent of
    # scheduling order across concurrent estimates.
    fp = repr((query.x_vars, query.y_vars, query.z_vars, query.align_depth, config.kind))
    digest = hashlib.sha256(fp.encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng([config.seed, *words])


def _surrogate_p(
    query: CmiQuery, config: EstimatorConfig, raw: float
) -> float:
    X, Y, Z = _blocks(query)
    rng = _query_rng(query, config)
    t_eff = query.t_eff
    lo = max(1, t_eff // 10)
    hi = max(lo, (9 * t_eff) // 10)
    exceed = 0
    for _ in range(config.surrogates):
        offsets = rng.integers(lo, hi + 1, size=X.shape[1])
        Xs = np.column_stack(
            [np.roll(X[:, i], int(off)) for i, off in enumerate(offsets)]
        )
        if _cmi_of_blocks(Xs, Y, Z, config) >= raw:
            exceed += 1
    return (1.0 + exceed) / (1.0 + config.surrogates)


def test_dependence(query: CmiQuery, config: EstimatorConfig, alpha: float) -> TestResult:
    """Estimate I(X;Y|Z) and attach a significance level.

    Analytic path (Gaussian, surrogates=0): likelihood-ratio approximation
    2*T_eff*I ~ chi-square with dim(x)*dim(y) degrees of freedom. Surrogate
    path: each x column is circularly shifted by an independent uniform
    offset in [T_eff/10, 9*T_eff/10]; p = (1 + #{I* >= I}) / (1 + S).
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    global _TEST_COUNT
    _TEST_COUNT += 1
    raw = _cmi_raw(query, config)
    stat = max(raw, 0.0)
    if config.surrogates == 0:
        dof = len(query.x_vars) * len(query.y_vars)
        p = float(chdtrc(dof, 2.0 * query.t_eff * stat))
        return TestResult(stat, p, dof)
    return TestResult(stat, _surrogate_p(query, config, raw), config.surrogates)


def ci_test(
    x_vars,
    y_vars,
    z_vars,
    data: TimeSeriesDataset,
    window: LagWindow,
    config: EstimatorConfig,
    alpha: float,
    align_depth: int | None = None,
) -> TestResult:
    """test_dependence without the query-object overhead on the analytic path.

    Hot-loop entry point for the PC and MCI phases; semantics are identical
    to building a CmiQuery and calling test_dependence.
    """
    if not config.analytic:
        query = CmiQuery(
            tuple(x_vars), tuple(y_vars), tuple(z_vars), data, window, align_depth
        )
        return test_dependence(query, config, alpha)
    global _TEST_COUNT
    _TEST_COUNT += 1
    depth = window.tau_max if align_depth is None else align_depth
    stats = _suffstats(data, depth)
    nx, ny = len(x_vars), len(y_vars)
    _require_samples(stats, nx + ny + len(z_vars))
    ix = [stats.index[p] for p in x_vars]
    iy = [stats.index[p] for p in y_vars]
    iz = [stats.index[p] for p in z_vars]
    _check_columns(stats, ix + iy + iz)
    c = stats.cov_r
    # CMI from the partial covariance of (x, y) given z:
    # I = 1/2 (ln det P_xx + ln det P_yy - ln det P_xy).
    cols = ix + iy
    P = c[np.ix_(cols, cols)]
    if iz:
        try:
            L = np.linalg.cholesky(c[np.ix_(iz, iz)])
        except np.linalg.LinAlgError:
            raise DegenerateDataError(
                f"singular covariance for columns {[stats.names[i] for i in iz]}"
            ) from None
        A = np.linalg.solve(L, c[np.ix_(iz, cols)])
        P = P - A.T @ A
    s_xx, ld_xx = np.linalg.slogdet(P[:nx, :nx])
    s_yy, ld_yy = np.linalg.slogdet(P[nx:, nx:])
    s_xy, ld_xy = np.linalg.slogdet(P)
    if min(s_xx, s_yy, s_xy) <= 0:
        raise DegenerateDataError(
            f"singular covariance for columns {[stats.names[i] for i in cols]}"
        )
    stat = max(0.5 * float(ld_xx + ld_yy - ld_xy), 0.0)
    dof = nx * ny
    return TestResult(stat, float(chdtrc(dof, 2.0 * stats.t_eff * stat)), dof)


def ci_test_round(
    x_blocks,
    y_vars,
    z_vars,
    data: TimeSeriesDataset,
    window: LagWindow,
    config: EstimatorConfig,
    alpha: float,
    align_depth: int | None = None,
) -> dict[tuple[VarLag, ...], TestResult]:
    """ci_test for several same-width x blocks against one shared (y, z).

    The conditioning block appears in every test, so on the analytic path
    the partial covariance of (all candidates, y) given z is computed once
    and each candidate only needs determinants of its own small sub-blocks.
    Results match per-block ci_test up to floating-point roundoff.
    """
    x_blocks = [tuple(x) for x in x_blocks]
    if not x_blocks:
        return {}
    if not config.analytic:
        return {
            x: ci_test(x, y_vars, z_vars, data, window, config, alpha, align_depth)
            for x in x_blocks
        }
    w = len(x_blocks[0])
    if any(len(x) != w for x in x_blocks):
        raise ValueError("all x blocks in a round must have the same width")
    global _TEST_COUNT
    depth = window.tau_max if align_depth is None else align_depth
    stats = _suffstats(data, depth)
    iy = [stats.index[p] for p in y_vars]
    iz = [stats.index[p] for p in z_vars]
    k, ny = len(x_blocks), len(iy)
    _require_samples(stats, w + ny + len(iz))
    ix_flat = [stats.index[p] for x in x_blocks for p in x]
    _check_columns(stats, ix_flat + iy + iz)
    c = stats.cov_r
    cols = ix_flat + iy
    P = c[np.ix_(cols, cols)]
    if iz:
        try:
            L = np.linalg.cholesky(c[np.ix_(iz, iz)])
        except np.linalg.LinAlgError:
            raise DegenerateDataError(
                f"singular covariance for columns {[stats.names[i] for i in iz]}"
            ) from None
        A = np.linalg.solve(L, c[np.ix_(iz, cols)])
        P = P - A.T @ A
    # Gather per-candidate P_xx (k,W,W) and P_[x y] (k,W+ny,W+ny) blocks.
    xi = np.arange(k * w).reshape(k, w)
    xyi = np.hstack([xi, np.tile(np.arange(k * w, k * w + ny), (k, 1))])
    s_xx, ld_xx = np.linalg.slogdet(P[xi[:, :, None], xi[:, None, :]])
    s_xy, ld_xy = np.linalg.slogdet(P[xyi[:, :, None], xyi[:, None, :]])
    s_yy, ld_yy = np.linalg.slogdet(P[k * w :, k * w :])
    if s_yy <= 0 or np.any(s_xx <= 0) or np.any(s_xy <= 0):
        raise DegenerateDataError(
            f"singular covariance for columns {[stats.names[i] for i in cols]}"
        )
    stat = np.maximum(0.5 * (ld_xx + ld_yy - ld_xy), 0.0)
    dof = w * ny
    p = chdtrc(dof, 2.0 * stats.t_eff * stat)
    _TEST_COUNT += k
    return {
        x: TestResult(float(s), float(pv), dof)
        for x, s, pv in zip(x_blocks, stat, p)
    }


def te_score(
    source: str,
    target: str,
    cond_set,
    data: TimeSeriesDataset,
    window: LagWindow,
    config: EstimatorConfig,
    alpha: float = 0.05,
) -> TestResult:
    """Truncated transfer entropy TE(source -> target | cond_set) over the window.

    The source's past lags form X jointly, the target's present is Y, and Z
    holds the past of the target itself plus every conditioning variable —
    the target's own history is always conditioned on.
    """
    if source == target:
        raise ValueError("te_score requires source != target")
    cond = sorted(set(cond_set))
    if source in cond or target in cond:
        raise ValueError("cond_set must exclude source and target")
    lags = list(window.lags)
    x = tuple((source, tau) for tau in lags)
    y = ((target, 0),)
    z = tuple((target, tau) for tau in lags) + tuple(
        (c, tau) for c in cond for tau in lags
    )
    query = CmiQuery(x, y, z, data, window)
    return test_dependence(query, config, alpha)


def te_score_round(
    sources,
    target: str,
    cond_set,
    data: TimeSeriesDataset,
    window: LagWindow,
    config: EstimatorConfig,
    alpha: float = 0.05,
) -> dict[str, TestResult]:
    """te_score for several sources against one target in one sweep.

    The conditioning block (target's past plus the selected sources' past)
    is the same for every candidate, so its log-determinants are computed
    once. Falls back to per-source te_score outside the analytic path;
    results are identical to calling te_score per source.
    """
    sources = list(sources)
    if not config.analytic:
        return {
            s: te_score(s, target, cond_set, data, window, config, alpha)
            for s in sources
        }
    lags = list(window.lags)
    cond = sorted(set(cond_set))
    if target in cond or any(s == target or s in cond for s in sources):
        raise ValueError("sources must exclude the target and cond_set")
    y = ((target, 0),)
    z = tuple((target, tau) for tau in lags) + tuple(
        (c, tau) for c in cond for tau in lags
    )
    blocks = [tuple((s, tau) for tau in lags) for s in sources]
    scored = ci_test_round(blocks, y, z, data, window, config, alpha)
    return {s: scored[b] for s, b in zip(sources, blocks)}


def auto_dependence_score(
    target: str,
    data: TimeSeriesDataset,
    window: LagWindow,
    config: EstimatorConfig,
    alpha: float = 0.05,
) -> TestResult:
    """Dependence of a variable's present on its own past over the window.

    Used by the filter to keep variables whose only link is a self-link;
    unconditional on the rest of the process, so the discovery stage still
    re-examines any proposed auto-edge against the variable's parents.
    """
    x = tuple((target, tau) for tau in window.lags)
    y = ((target, 0),)
    if config.analytic:
        return ci_test(x, y, (), data, window, config, alpha)
    return test_dependence(CmiQuery(x, y, (), data, window), config, alpha)


def mci_statistic(
    edge: tuple[str, int, str],
    parents_of_target: ParentSet,
    parents_of_source: ParentSet,
    data: TimeSeriesDataset,
    window: LagWindow,
    config: EstimatorConfig,
    alpha: float = 0.05,
) -> TestResult:
    """Lag-specific dependence of X_{t-tau} on Y_t given both parent sets.

    The source's parents are time-shifted by the edge lag (conditioning on
    the parents of X_{t-tau}, not of X_t); alignment for this test drops
    2*tau_max samples so the shifted parents fit.
    """
    source, lag, target = edge
    if not (window.tau_min <= lag <= window.tau_max):
        raise ValueError(f"edge lag {lag} outside window")
    depth = 2 * window.tau_max
    x = ((source, lag),)
    y = ((target, 0),)
    z = set(parents_of_target.parents) - {(source, lag)}
    for p_var, p_lag in parents_of_source.parents:
        shifted = p_lag + lag
        if shifted <= depth:
            z.add((p_var, shifted))
    z -= {(source, lag), (target, 0)}
    return ci_test(x, y, tuple(sorted(z)), data, window, config, alpha, align_depth=depth)
