"""Constrained causal discovery: lagged PC condition selection plus MCI validation.

Constrained mode starts from the filter's hypothetical structure (the full
filtered pipeline); unconstrained mode starts fully connected over all
lagged candidates (plain baseline) for head-to-head comparison.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from causa.core import (
    CausalGraph,
    HypotheticalStructure,
    LaggedEdge,
    LagWindow,
    ParentSet,
    TimeSeriesDataset,
)
from causa.estimators import (
    EstimatorConfig,
    ci_test,
    mci_statistic,
    test_count,
)
from causa.filtering import FilterResult, select_features, shrink

VarLag = tuple[str, int]


@dataclass(frozen=True)
class DiscoveryConfig:
    alpha: float = 0.05
    window: LagWindow = LagWindow(1, 1)
    max_conditioning_dim: int = 3
    max_parents_in_mci: int = 5
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    constrained: bool = True

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.max_conditioning_dim < 0:
            raise ValueError("max_conditioning_dim must be >= 0")
        if self.max_parents_in_mci < 1:
            raise ValueError("max_parents_in_mci must be >= 1")


@dataclass
class _Candidate:
    statistic: float = float("inf")  # untested candidates sort strongest
    p_value: float = 0.0


def pc_phase(
    data: TimeSeriesDataset,
    init: HypotheticalStructure | None,
    cfg: DiscoveryConfig,
) -> dict[str, dict[VarLag, tuple[float, float]]]:
    """Iterative conditional-independence pruning of candidate lagged parents.

    For growing conditioning dimension k, each surviving candidate of a
    target is tested against the k strongest other survivors; removals are
    committed only after the full sweep of a level (stable variant), so the
    outcome is independent of iteration order. Returns per-target surviving
    parents with their last-round statistic and p-value.
    """
    lags = list(cfg.window.lags)
    surviving: dict[str, dict[VarLag, _Candidate]] = {}
    for target in data.var_names:
        if init is None:
            cands = [(x, tau) for x in data.var_names for tau in lags]
        else:
            cands = sorted(init.parents_of(target))
        surviving[target] = {c: _Candidate() for c in cands}

    for k in range(cfg.max_conditioning_dim + 1):
        tested_any = False
        removals: list[tuple[str, VarLag]] = []
        updates: list[tuple[str, VarLag, float, float]] = []
        for target in data.var_names:
            cands = surviving[target]
            if len(cands) - 1 < k:
                continue
            by_strength = sorted(
                cands.items(), key=lambda kv: (-kv[1].statistic, kv[0])
            )
            for cand in sorted(cands):
                others = [c for c, _ in by_strength if c != cand][:k]
                res = ci_test(
                    (cand,),
                    ((target, 0),),
                    tuple(sorted(others)),
                    data,
                    cfg.window,
                    cfg.estimator,
                    cfg.alpha,
                )
                tested_any = True
                updates.append((target, cand, res.statistic, res.p_value))
                if res.p_value > cfg.alpha:
                    removals.append((target, cand))
        for target, cand, stat, p in updates:
            entry = surviving[target][cand]
            entry.statistic = stat
            entry.p_value = p
        for target, cand in removals:
            del surviving[target][cand]
        if not tested_any:
            break

    return {
        target: {c: (e.statistic, e.p_value) for c, e in sorted(cands.items())}
        for target, cands in surviving.items()
        if cands
    }


def _top_parents(
    parents: dict[str, dict[VarLag, tuple[float, float]]], var: str, cap: int
) -> ParentSet:
    cands = parents.get(var, {})
    ranked = sorted(cands.items(), key=lambda kv: (-kv[1][0], kv[0]))
    return ParentSet(var, frozenset(c for c, _ in ranked[:cap]))


def mci_phase(
    data: TimeSeriesDataset,
    parents: dict[str, dict[VarLag, tuple[float, float]]],
    cfg: DiscoveryConfig,
) -> CausalGraph:
    """Validate every surviving link with the lag-specific MCI statistic.

    An edge is retained iff its MCI p-value <= alpha (inclusive boundary).
    Graph nodes are the dataset's variables, so filtered-out variables never
    appear and selected-but-unlinked ones appear isolated.
    """
    edges = []
    for target in data.var_names:
        p_target = _top_parents(parents, target, cfg.max_parents_in_mci)
        for source, lag in sorted(parents.get(target, {})):
            p_source = _top_parents(parents, source, cfg.max_parents_in_mci)
            res = mci_statistic(
                (source, lag, target),
                p_target,
                p_source,
                data,
                cfg.window,
                cfg.estimator,
                cfg.alpha,
            )
            if res.p_value <= cfg.alpha:
                edges.append(
                    LaggedEdge(source, lag, target, res.statistic, res.p_value)
                )
    return CausalGraph(
        frozenset(data.var_names), frozenset(edges), cfg.window, cfg.alpha
    )


@dataclass
class DiscoveryRun:
    graph: CausalGraph
    mode: str
    stage_ms: dict[str, float]
    test_counts: dict[str, int]
    filter_result: FilterResult | None = None

    @property
    def total_ms(self) -> float:
        return sum(self.stage_ms.values())


def discover(data: TimeSeriesDataset, cfg: DiscoveryConfig) -> DiscoveryRun:
    """Run the full pipeline in the configured mode.

    Constrained: select_features -> shrink -> pc_phase(structure) -> mci_phase.
    Unconstrained: pc_phase(fully connected) -> mci_phase on the original data.
    """
    stage_ms: dict[str, float] = {}
    counts: dict[str, int] = {}
    filter_result = None
    work = data
    init: HypotheticalStructure | None = None

    if cfg.constrained:
        t0 = time.perf_counter()
        n0 = test_count()
        filter_result = select_features(data, cfg.alpha, cfg.window, cfg.estimator)
        work = shrink(data, filter_result)
        stage_ms["filter"] = 1000.0 * (time.perf_counter() - t0)
        counts["filter"] = test_count() - n0
        if work is None:
            stage_ms["pc"] = 0.0
            stage_ms["mci"] = 0.0
            counts["pc"] = 0
            counts["mci"] = 0
            empty = CausalGraph(frozenset(), frozenset(), cfg.window, cfg.alpha)
            return DiscoveryRun(empty, "fpcmci", stage_ms, counts, filter_result)
        init = filter_result.structure

    t0 = time.perf_counter()
    n0 = test_count()
    parents = pc_phase(work, init, cfg)
    stage_ms["pc"] = 1000.0 * (time.perf_counter() - t0)
    counts["pc"] = test_count() - n0

    t0 = time.perf_counter()
    n0 = test_count()
    graph = mci_phase(work, parents, cfg)
    stage_ms["mci"] = 1000.0 * (time.perf_counter() - t0)
    counts["mci"] = test_count() - n0

    mode = "fpcmci" if cfg.constrained else "pcmci"
    return DiscoveryRun(graph, mode, stage_ms, counts, filter_result)
