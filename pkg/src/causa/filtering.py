"""Transfer-entropy feature selection.

Per-target greedy forward selection: repeatedly score every remaining
source against the target given the already-selected sources, accept the
strongest candidate while its p-value clears the threshold, and stop at the
first insignificant best candidate. Variables that are never selected in
either role are dropped from the analysis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from causa.core import HypotheticalStructure, LagWindow, TimeSeriesDataset
from causa.estimators import EstimatorConfig, auto_dependence_score, te_score_round


@dataclass(frozen=True)
class TraceEntry:
    target: str
    candidate: str
    statistic: float
    p_value: float
    accepted: bool


@dataclass(frozen=True)
class FilterResult:
    selected_vars: frozenset[str]
    structure: HypotheticalStructure
    trace: tuple[TraceEntry, ...]

    def to_json(self) -> str:
        payload = {
            "selected_vars": sorted(self.selected_vars),
            "structure": {
                t: sorted([s, lag] for s, lag in ps)
                for t, ps in sorted(self.structure.candidates.items())
            },
            "trace": [
                {
                    "target": e.target,
                    "candidate": e.candidate,
                    "statistic": e.statistic,
                    "p_value": e.p_value,
                    "accepted": e.accepted,
                }
                for e in self.trace
            ],
        }
        return json.dumps(payload, indent=2) + "\n"


def select_features(
    data: TimeSeriesDataset,
    alpha: float,
    window: LagWindow,
    config: EstimatorConfig,
) -> FilterResult:
    """Greedy TE-based selection of sources for every target.

    Deterministic: candidates are scanned in dataset column order and arg-max
    ties break by lower p-value, then lexicographic source name. Each target
    draws from its own candidate pool, so results do not depend on target
    iteration order.
    """
    if data.n_vars < 2:
        raise ValueError("feature selection needs at least two variables")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0,1), got {alpha}")

    sources_of: dict[str, list[str]] = {}
    auto_dependent: set[str] = set()
    trace: list[TraceEntry] = []
    for target in data.var_names:
        # Self-dependence check first: a variable whose only link is a
        # self-link must survive selection (its own past is conditioned on
        # in every cross test, so the greedy loop cannot certify it).
        auto = auto_dependence_score(target, data, window, config, alpha)
        auto_ok = auto.p_value <= alpha
        if auto_ok:
            auto_dependent.add(target)
        trace.append(
            TraceEntry(target, target, auto.statistic, auto.p_value, auto_ok)
        )
        pool = [v for v in data.var_names if v != target]
        selected: list[str] = []
        while pool:
            scored = te_score_round(
                pool, target, selected, data, window, config, alpha
            )
            best_name = min(
                pool,
                key=lambda s: (-scored[s].statistic, scored[s].p_value, s),
            )
            accept = scored[best_name].p_value <= alpha
            for name in pool:
                res = scored[name]
                trace.append(
                    TraceEntry(
                        target=target,
                        candidate=name,
                        statistic=res.statistic,
                        p_value=res.p_value,
                        accepted=accept and name == best_name,
                    )
                )
            if not accept:
                break
            pool.remove(best_name)
            selected.append(best_name)
        if selected:
            sources_of[target] = selected

    selected_vars = set(sources_of) | auto_dependent
    for srcs in sources_of.values():
        selected_vars.update(srcs)

    lags = list(window.lags)
    candidates: dict[str, set[tuple[str, int]]] = {}
    for target, srcs in sources_of.items():
        candidates[target] = {(s, tau) for s in srcs for tau in lags}
    for var in auto_dependent:
        candidates.setdefault(var, set()).update((var, tau) for tau in lags)

    return FilterResult(
        selected_vars=frozenset(selected_vars),
        structure=HypotheticalStructure(
            {t: frozenset(ps) for t, ps in candidates.items()}
        ),
        trace=tuple(trace),
    )


def shrink(data: TimeSeriesDataset, result: FilterResult) -> TimeSeriesDataset | None:
    """Dataset restricted to the selected variables, column order preserved.

    Returns None when nothing was selected; downstream discovery
    short-circuits to an empty graph.
    """
    unknown = result.selected_vars - set(data.var_names)
    if unknown:
        raise ValueError(f"selected variables not in dataset: {sorted(unknown)}")
    keep = [v for v in data.var_names if v in result.selected_vars]
    if not keep:
        return None
    if len(keep) == len(data.var_names):
        # Same object on purpose: downstream phases then reuse the cached
        # sufficient statistics already built during selection.
        return data
    idx = [data.index_of(v) for v in keep]
    return TimeSeriesDataset(tuple(keep), data.values[:, idx])
