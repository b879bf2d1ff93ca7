import math

import numpy as np
import pytest

from causa.core import LagWindow, ParentSet, TimeSeriesDataset
from causa.estimators import (
    CmiQuery,
    DegenerateDataError,
    EstimatorConfig,
    auto_dependence_score,
    ci_test,
    ci_test_round,
    estimate_cmi,
    mci_statistic,
    te_score,
    te_score_round,
)
from causa.estimators import TestResult as CiResult
from causa.estimators import test_count as run_count
from causa.estimators import test_dependence as run_test

from conftest import make_chain_dataset, make_noise_dataset, make_pair_dataset

GAUSSIAN = EstimatorConfig()
W1 = LagWindow(1, 1)
W2 = LagWindow(1, 2)


def _corr_dataset(seed: int, rho: float, t: int = 100_000) -> TimeSeriesDataset:
    """Two jointly Gaussian columns with the given correlation."""
    r = np.random.default_rng(seed)
    x = r.normal(size=t)
    y = rho * x + math.sqrt(1 - rho**2) * r.normal(size=t)
    return TimeSeriesDataset(("X", "Y"), np.column_stack([x, y]))


class TestEstimatorConfig:
    def test_defaults_are_analytic(self):
        assert GAUSSIAN.analytic

    def test_surrogates_disable_analytic(self):
        assert not EstimatorConfig(surrogates=50).analytic

    def test_knn_requires_surrogates(self):
        with pytest.raises(ValueError):
            EstimatorConfig(kind="knn")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            EstimatorConfig(kind="kernel")

    def test_bad_k(self):
        with pytest.raises(ValueError):
            EstimatorConfig(kind="knn", knn_k=0, surrogates=10)


class TestCmiQuery:
    def test_rejects_empty_x(self):
        d = make_noise_dataset(0)
        with pytest.raises(ValueError):
            CmiQuery((), (("Y", 0),), (), d, W1)

    def test_rejects_overlap(self):
        d = make_noise_dataset(0)
        with pytest.raises(ValueError):
            CmiQuery((("X", 1),), (("Y", 0),), (("X", 1),), d, W1)

    def test_rejects_lag_beyond_depth(self):
        d = make_noise_dataset(0)
        with pytest.raises(ValueError):
            CmiQuery((("X", 2),), (("Y", 0),), (), d, W1)

    def test_t_eff(self):
        d = make_noise_dataset(0, t=500)
        q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        assert q.t_eff == 499


class TestGaussianCmi:
    def test_known_correlation_value(self):
        """I(X;Y) = -0.5 ln(1 - rho^2) = 0.5108 nats at rho = 0.8."""
        q = CmiQuery((("X", 0),), (("Y", 0),), (), _corr_dataset(0, 0.8), W1)
        assert abs(estimate_cmi(q, GAUSSIAN) - 0.5108256) < 0.02

    def test_independent_near_zero(self):
        d = make_noise_dataset(1, t=50_000)
        q = CmiQuery((("X", 0),), (("Y", 0),), (), d, W1)
        assert estimate_cmi(q, GAUSSIAN) < 1e-3

    def test_chain_conditional_independence(self):
        """In X -> Z -> Y, I(X_{t-2}; Y_t | Z_{t-1}) is near zero."""
        d = make_chain_dataset(2, t=20_000)
        q = CmiQuery((("X", 2),), (("Y", 0),), (("Z", 1),), d, W2)
        assert estimate_cmi(q, GAUSSIAN) < 2e-4

    def test_conditioning_removes_less_than_marginal(self):
        d = make_chain_dataset(3, t=20_000)
        marginal = CmiQuery((("X", 2),), (("Y", 0),), (), d, W2)
        conditional = CmiQuery((("X", 2),), (("Y", 0),), (("Z", 1),), d, W2)
        assert estimate_cmi(marginal, GAUSSIAN) > 10 * estimate_cmi(conditional, GAUSSIAN)

    def test_symmetry(self):
        d = make_pair_dataset(4)
        a = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        b = CmiQuery((("Y", 0),), (("X", 1),), (), d, W1)
        assert abs(estimate_cmi(a, GAUSSIAN) - estimate_cmi(b, GAUSSIAN)) <= 1e-9

    def test_nonnegative(self):
        for seed in range(20):
            d = make_noise_dataset(seed)
            q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
            assert estimate_cmi(q, GAUSSIAN) >= 0.0

    def test_monotone_consistency(self):
        """Median |estimate - truth| over 20 seeds shrinks as T grows."""
        truth = -0.5 * math.log(1 - 0.64)
        med = {}
        for t in (500, 5000, 50_000):
            errs = []
            for seed in range(20):
                q = CmiQuery(
                    (("X", 0),), (("Y", 0),), (), _corr_dataset(seed, 0.8, t), W1
                )
                errs.append(abs(estimate_cmi(q, GAUSSIAN) - truth))
            med[t] = float(np.median(errs))
        assert med[500] > med[5000] > med[50_000]

    def test_constant_column_degenerate(self):
        vals = np.column_stack([np.ones(200), np.random.default_rng(0).normal(size=200)])
        d = TimeSeriesDataset(("X", "Y"), vals)
        q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        with pytest.raises(DegenerateDataError):
            estimate_cmi(q, GAUSSIAN)

    def test_too_few_samples_degenerate(self):
        d = make_noise_dataset(0, t=4)
        q = CmiQuery((("X", 1),), (("Y", 0),), (("X", 0), ("Y", 1)), d, W1)
        with pytest.raises(DegenerateDataError):
            estimate_cmi(q, GAUSSIAN)


class TestDependenceTest:
    def test_result_validation(self):
        with pytest.raises(ValueError):
            CiResult(0.1, 1.2, 1)

    def test_analytic_detects_link(self):
        d = make_pair_dataset(0)
        q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        res = run_test(q, GAUSSIAN, 0.05)
        assert res.p_value < 1e-6
        assert res.dof_or_surrogates == 1

    def test_analytic_false_positive_rate(self):
        """Null rejection rate at alpha = 0.05 over 100 independent pairs."""
        rejections = sum(
            run_test(
                CmiQuery((("X", 1),), (("Y", 0),), (), make_noise_dataset(s), W1),
                GAUSSIAN,
                0.05,
            ).p_value
            <= 0.05
            for s in range(100)
        )
        assert 2 <= rejections <= 9

    def test_surrogate_floor(self):
        """With S=99 surrogates the smallest reachable p-value is 1/100."""
        cfg = EstimatorConfig(surrogates=99, seed=7)
        d = make_pair_dataset(1)
        q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        res = run_test(q, cfg, 0.05)
        assert res.p_value == pytest.approx(0.01)
        assert res.dof_or_surrogates == 99

    def test_surrogate_null_is_calibrated(self):
        cfg = EstimatorConfig(surrogates=39, seed=3)
        d = make_noise_dataset(11, t=800)
        q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        res = run_test(q, cfg, 0.05)
        assert res.p_value > 0.05

    def test_surrogate_seed_reproducibility(self):
        d = make_pair_dataset(2, coeff=0.2)
        q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        a = run_test(q, EstimatorConfig(surrogates=49, seed=5), 0.05)
        b = run_test(q, EstimatorConfig(surrogates=49, seed=5), 0.05)
        c = run_test(q, EstimatorConfig(surrogates=49, seed=6), 0.05)
        assert a == b
        assert a.statistic == c.statistic

    def test_test_count_increments(self):
        d = make_noise_dataset(0)
        q = CmiQuery((("X", 1),), (("Y", 0),), (), d, W1)
        before = run_count()
        run_test(q, GAUSSIAN, 0.05)
        assert run_count() == before + 1


class TestKnn:
    def test_detects_linear_link(self):
        cfg = EstimatorConfig(kind="knn", knn_k=4, surrogates=29, seed=0)
        d = make_pair_dataset(0, t=400)
        res = te_score("X", "Y", (), d, W1, cfg)
        assert res.p_value <= 0.05

    def test_null_not_rejected(self):
        cfg = EstimatorConfig(kind="knn", knn_k=4, surrogates=29, seed=1)
        d = make_noise_dataset(5, t=400)
        res = te_score("X", "Y", (), d, W1, cfg)
        assert res.p_value > 0.05


class TestCiTestPaths:
    def test_ci_test_matches_query_path(self):
        d = make_chain_dataset(0)
        x, y, z = (("X", 2),), (("Y", 0),), (("Z", 1), ("Y", 1))
        lean = ci_test(x, y, tuple(sorted(z)), d, W2, GAUSSIAN, 0.05)
        ref = run_test(CmiQuery(x, y, tuple(sorted(z)), d, W2), GAUSSIAN, 0.05)
        assert lean.statistic == pytest.approx(ref.statistic, abs=1e-10)
        assert lean.p_value == pytest.approx(ref.p_value, abs=1e-10)

    def test_round_matches_single(self):
        d = make_chain_dataset(1)
        y = (("Y", 0),)
        z = (("Y", 1), ("Y", 2))
        blocks = [(("X", 1), ("X", 2)), (("Z", 1), ("Z", 2))]
        batch = ci_test_round(blocks, y, z, d, W2, GAUSSIAN, 0.05)
        for b in blocks:
            single = ci_test(b, y, z, d, W2, GAUSSIAN, 0.05)
            assert batch[b].statistic == pytest.approx(single.statistic, abs=1e-10)
            assert batch[b].p_value == pytest.approx(single.p_value, abs=1e-10)

    def test_round_counts_every_test(self):
        d = make_chain_dataset(2)
        blocks = [(("X", 1), ("X", 2)), (("Z", 1), ("Z", 2))]
        before = run_count()
        ci_test_round(blocks, (("Y", 0),), (), d, W2, GAUSSIAN, 0.05)
        assert run_count() == before + 2


class TestTeScore:
    def test_source_equals_target_rejected(self):
        d = make_pair_dataset(0)
        with pytest.raises(ValueError):
            te_score("X", "X", (), d, W1, GAUSSIAN)

    def test_cond_set_must_exclude_endpoints(self):
        d = make_chain_dataset(0)
        with pytest.raises(ValueError):
            te_score("X", "Y", ("Y",), d, W1, GAUSSIAN)

    def test_detects_directed_link(self):
        d = make_pair_dataset(3)
        assert te_score("X", "Y", (), d, W1, GAUSSIAN).p_value < 1e-6

    def test_reverse_direction_is_null(self):
        d = make_pair_dataset(3)
        assert te_score("Y", "X", (), d, W1, GAUSSIAN).p_value > 0.01

    def test_conditioning_blocks_mediated_path(self):
        d = make_chain_dataset(8)
        direct = te_score("X", "Y", (), d, W2, GAUSSIAN)
        blocked = te_score("X", "Y", ("Z",), d, W2, GAUSSIAN)
        assert direct.p_value < 1e-6
        assert blocked.p_value > 0.05

    def test_round_matches_per_source(self):
        d = make_chain_dataset(5)
        batch = te_score_round(["X", "Z"], "Y", (), d, W2, GAUSSIAN)
        for s in ("X", "Z"):
            single = te_score(s, "Y", (), d, W2, GAUSSIAN)
            assert batch[s].statistic == pytest.approx(single.statistic, abs=1e-10)

    def test_round_rejects_target_in_sources(self):
        d = make_chain_dataset(0)
        with pytest.raises(ValueError):
            te_score_round(["X", "Y"], "Y", (), d, W2, GAUSSIAN)


class TestAutoDependence:
    def test_autocorrelated_variable_detected(self):
        r = np.random.default_rng(0)
        x = np.zeros(2000)
        for t in range(1, 2000):
            x[t] = 0.7 * x[t - 1] + r.normal()
        d = TimeSeriesDataset(("X", "Y"), np.column_stack([x, r.normal(size=2000)]))
        assert auto_dependence_score("X", d, W1, GAUSSIAN).p_value < 1e-6
        assert auto_dependence_score("Y", d, W1, GAUSSIAN).p_value > 0.01


class TestMciStatistic:
    def test_lag_specificity(self):
        """A lag-2 link scores significant at lag 2 and null at lag 1."""
        d = make_pair_dataset(6, lag=2, t=2000)
        px = ParentSet("X")
        py = ParentSet("Y", frozenset({("X", 2)}))
        hit = mci_statistic(("X", 2, "Y"), py, px, d, W2, GAUSSIAN)
        miss = mci_statistic(("X", 1, "Y"), py, px, d, W2, GAUSSIAN)
        assert hit.p_value < 1e-6
        assert miss.p_value > 0.05

    def test_conditions_away_mediated_edge(self):
        d = make_chain_dataset(7)
        py = ParentSet("Y", frozenset({("Z", 1), ("X", 2)}))
        px = ParentSet("X")
        res = mci_statistic(("X", 2, "Y"), py, px, d, W2, GAUSSIAN)
        assert res.p_value > 0.05

    def test_lag_outside_window_rejected(self):
        d = make_pair_dataset(0)
        with pytest.raises(ValueError):
            mci_statistic(("X", 3, "Y"), ParentSet("Y"), ParentSet("X"), d, W2, GAUSSIAN)
