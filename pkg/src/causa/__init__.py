"""Filtered causal discovery for multivariate time series.

A transfer-entropy feature-selection filter prunes the variable set and
proposes a hypothetical causal structure; a constrained PC + MCI stage
validates it into a lag-specific causal graph. Includes synthetic
ground-truthed generators, graph-recovery metrics and a benchmark CLI.
"""

from causa.core import (
    CausalGraph,
    HypotheticalStructure,
    LagWindow,
    LaggedEdge,
    ParentSet,
    TimeSeriesDataset,
    load_csv,
    parse_graph,
    serialize_graph,
)
from causa.discovery import DiscoveryConfig, DiscoveryRun, discover
from causa.estimators import EstimatorConfig, TestResult, estimate_cmi, test_dependence
from causa.filtering import FilterResult, select_features, shrink
from causa.metrics import EvaluationReport, score_graph
from causa.synth import ToySystemSpec, generate_toy, generate_var

__all__ = [
    "CausalGraph",
    "DiscoveryConfig",
    "DiscoveryRun",
    "EstimatorConfig",
    "EvaluationReport",
    "FilterResult",
    "HypotheticalStructure",
    "LagWindow",
    "LaggedEdge",
    "ParentSet",
    "TestResult",
    "TimeSeriesDataset",
    "ToySystemSpec",
    "discover",
    "estimate_cmi",
    "generate_toy",
    "generate_var",
    "load_csv",
    "parse_graph",
    "score_graph",
    "select_features",
    "serialize_graph",
    "shrink",
    "test_dependence",
]

__version__ = "0.1.0"
