"""Greedy steps, BIC stopping, and the plain projection pursuit fit."""

import math

import numpy as np
import pytest

from eppr.ensemble import FitConfig
from eppr.errors import ConfigError
from eppr.greedy import (
    RunData,
    bic_value,
    fit_ppr_full,
    relaxation_weight,
    run_greedy,
    select_candidate_subsets,
)
from eppr.singleindex import SingleIndexOptions, eval_ridge_batch, fit_single_index
from eppr.spline import make_uniform_knots


def make_config(**kw) -> FitConfig:
    base = dict(variant="aga", q=2, ell=2, B=1, k_max=4, J=7, degree=3,
                nu=0.2, stopping="fixed_k", seed=0)
    base.update(kw)
    return FitConfig(**base)


def make_data(n: int, p: int, y, seed: int = 0, J: int = 7) -> RunData:
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, (n, p))
    return RunData(X=X, y=y(X, rng), kv=make_uniform_knots(J, 3))


class TestSelectCandidateSubsets:
    def test_sorted_and_in_range(self) -> None:
        rng = np.random.default_rng(0)
        for subset in select_candidate_subsets(10, 4, 20, rng):
            assert subset.shape == (4,)
            assert np.all(np.diff(subset) > 0)
            assert subset.min() >= 0 and subset.max() < 10

    def test_full_subset_when_q_equals_p(self) -> None:
        rng = np.random.default_rng(1)
        for subset in select_candidate_subsets(5, 5, 10, rng):
            np.testing.assert_array_equal(subset, np.arange(5))

    def test_uniform_over_singletons(self) -> None:
        rng = np.random.default_rng(2)
        draws = select_candidate_subsets(2, 1, 1000, rng)
        freq = np.mean([s[0] == 0 for s in draws])
        assert abs(freq - 0.5) < 0.05

    def test_deterministic_given_stream(self) -> None:
        a = select_candidate_subsets(8, 3, 5, np.random.default_rng(3))
        b = select_candidate_subsets(8, 3, 5, np.random.default_rng(3))
        for s, t in zip(a, b):
            np.testing.assert_array_equal(s, t)

    def test_invalid_sizes(self) -> None:
        rng = np.random.default_rng(4)
        with pytest.raises(ConfigError, match="q"):
            select_candidate_subsets(3, 4, 1, rng)
        with pytest.raises(ConfigError, match="ell"):
            select_candidate_subsets(3, 2, 0, rng)


class TestBicValue:
    def test_zero_terms_is_mean_sse(self) -> None:
        assert bic_value(0, 50.0, 100, 4, 8, 0.2) == pytest.approx(0.5)

    def test_frozen_example(self) -> None:
        expected = math.log(100) * (4 + 8.0 ** 1.2) / 100
        assert bic_value(1, 0.0, 100, 4, 8, 0.2) == pytest.approx(
            expected, rel=1e-12
        )

    def test_penalty_strictly_increasing_in_tau(self) -> None:
        values = [bic_value(t, 10.0, 200, 3, 7, 0.2) for t in range(5)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestRelaxationWeight:
    def test_first_three(self) -> None:
        np.testing.assert_allclose(
            [relaxation_weight(k) for k in (1, 2, 3)],
            [1.0 / 3.0, 0.5, 0.6],
        )

    def test_requires_positive_index(self) -> None:
        with pytest.raises(ConfigError):
            relaxation_weight(0)


class TestAgaRuns:
    def test_single_ridge_noiseless_recovered(self) -> None:
        data = make_data(
            300, 3, lambda X, r: np.sin(2.0 * X @ np.array([0.6, -0.64, 0.48])),
            seed=5, J=14,
        )
        cfg = make_config(variant="aga", q=3, ell=1, k_max=1, J=14)
        model = run_greedy(data, cfg, np.random.default_rng(0))
        resid = data.y - model.predict(data.X)
        assert float(resid @ resid) < 1e-6 * float(data.y @ data.y)

    def test_damped_objective_monotone(self) -> None:
        data = make_data(
            200, 6,
            lambda X, r: np.sin(2 * X[:, 0]) + X[:, 3] ** 2
            + 0.2 * r.standard_normal(X.shape[0]),
            seed=6,
        )
        cfg = make_config(variant="aga", q=3, ell=2, k_max=5)
        model = run_greedy(data, cfg, np.random.default_rng(1))
        obj = model.objective_trace
        assert len(obj) == 5
        for a, b in zip(obj, obj[1:]):
            assert b <= a * (1.0 + 1e-9) + 1e-12

    def test_two_additive_signals_found_in_two_steps(self) -> None:
        # p = 2, singleton subsets, enough candidates per step that both
        # features are drawn: the two additive components are recovered
        # by step two.
        rng = np.random.default_rng(7)
        X = rng.uniform(-1.0, 1.0, (300, 2))
        y = np.sin(2.5 * X[:, 0]) + np.cos(3.0 * X[:, 1])
        data = RunData(X=X, y=y, kv=make_uniform_knots(8, 3))
        cfg = make_config(variant="aga", q=1, ell=8, k_max=2, J=8)
        model = run_greedy(data, cfg, np.random.default_rng(2))
        used = {int(r.subset[0]) for r in model.ridges}
        assert used == {0, 1}
        resid = y - model.predict(X)
        assert float(resid @ resid) < 1e-4 * float(y @ y)

    def test_weights_are_ones(self) -> None:
        data = make_data(150, 3, lambda X, r: X[:, 0] ** 2, seed=8)
        cfg = make_config(variant="aga", q=2, ell=1, k_max=3)
        model = run_greedy(data, cfg, np.random.default_rng(3))
        np.testing.assert_array_equal(model.weights, np.ones(3))
        assert model.oga_scale is None and model.rga_weights is None


class TestOgaRuns:
    def test_residual_norm_monotone(self) -> None:
        data = make_data(
            200, 5,
            lambda X, r: np.tanh(2 * X[:, 1]) + 0.5 * X[:, 4]
            + 0.2 * r.standard_normal(X.shape[0]),
            seed=9,
        )
        cfg = make_config(variant="oga", q=2, ell=2, k_max=6)
        model = run_greedy(data, cfg, np.random.default_rng(4))
        sse = model.sse_trace
        for a, b in zip(sse, sse[1:]):
            assert b <= a * (1.0 + 1e-9) + 1e-12

    def test_terms_have_unit_empirical_norm(self) -> None:
        data = make_data(
            250, 4,
            lambda X, r: np.sin(3 * X[:, 0]) + 0.1 * r.standard_normal(250),
            seed=10,
        )
        cfg = make_config(variant="oga", q=2, ell=1, k_max=3)
        model = run_greedy(data, cfg, np.random.default_rng(5))
        for ridge in model.ridges:
            values = eval_ridge_batch(ridge, data.X)
            norm = math.sqrt(float(values @ values) / data.X.shape[0])
            assert norm == pytest.approx(1.0, rel=1e-10) or norm < 1e-12

    def test_orthogonal_column_leaves_coefficients(self) -> None:
        # Refit on the fixed columns: when the appended column is
        # orthogonal to the span, earlier multipliers are unchanged.
        from eppr.numerics import solve_ridge_ls

        rng = np.random.default_rng(11)
        h1 = rng.standard_normal(60)
        h2 = rng.standard_normal(60)
        h2 -= (h1 @ h2) / (h1 @ h1) * h1
        target = 2.0 * h1 + 0.5 * h2
        first = solve_ridge_ls(h1[:, None], target, damping=0.0)
        both = solve_ridge_ls(np.column_stack([h1, h2]), target, damping=0.0)
        assert both.coefficients[0] == pytest.approx(
            first.coefficients[0], rel=1e-10
        )

    def test_k1_matches_aga_up_to_factorization(self) -> None:
        data = make_data(
            220, 3,
            lambda X, r: np.sin(2 * X @ np.array([0.8, 0.0, -0.6]))
            + 0.05 * r.standard_normal(220),
            seed=12,
        )
        cfg_a = make_config(variant="aga", q=3, ell=1, k_max=1)
        cfg_o = make_config(variant="oga", q=3, ell=1, k_max=1)
        model_a = run_greedy(data, cfg_a, np.random.default_rng(6))
        model_o = run_greedy(data, cfg_o, np.random.default_rng(6))
        np.testing.assert_allclose(
            model_a.predict(data.X), model_o.predict(data.X), atol=1e-8
        )


class TestRgaRuns:
    def test_alpha_weights_cumulative_products(self) -> None:
        data = make_data(
            200, 4,
            lambda X, r: np.sin(2 * X[:, 0]) + 0.1 * r.standard_normal(200),
            seed=13,
        )
        cfg = make_config(variant="rga", q=2, ell=1, k_max=4)
        model = run_greedy(data, cfg, np.random.default_rng(7))
        k = 4
        expected = [
            np.prod([relaxation_weight(j) for j in range(tau + 1, k + 1)])
            for tau in range(1, k + 1)
        ]
        np.testing.assert_allclose(model.weights, expected, rtol=1e-12)

    def test_stored_weights_match_recursive_evaluation(self) -> None:
        # Independent oracle: unroll m_k = alpha_k m_{k-1} + g_k on raw
        # per-term evaluations.
        data = make_data(
            200, 4,
            lambda X, r: np.cos(2 * X[:, 1]) + X[:, 2]
            + 0.1 * r.standard_normal(200),
            seed=14,
        )
        cfg = make_config(variant="rga", q=2, ell=2, k_max=4)
        model = run_greedy(data, cfg, np.random.default_rng(8))
        Xq = np.random.default_rng(15).uniform(-1.0, 1.0, (50, 4))
        recursive = np.zeros(50)
        for k, ridge in enumerate(model.ridges, start=1):
            recursive = (
                relaxation_weight(k) * recursive + eval_ridge_batch(ridge, Xq)
            )
        stored = model.predict(Xq) - model.intercept
        np.testing.assert_allclose(stored, recursive, atol=1e-10)

    def test_single_step_weight_is_one(self) -> None:
        data = make_data(150, 2, lambda X, r: X[:, 0], seed=16)
        cfg = make_config(variant="rga", q=1, ell=1, k_max=1)
        model = run_greedy(data, cfg, np.random.default_rng(9))
        np.testing.assert_allclose(model.weights, [1.0])


class TestRunGreedy:
    def test_fixed_k_takes_exactly_k_steps(self) -> None:
        data = make_data(160, 3, lambda X, r: X[:, 0] ** 3, seed=17)
        cfg = make_config(q=2, ell=1, k_max=3, stopping="fixed_k")
        model = run_greedy(data, cfg, np.random.default_rng(10))
        assert model.k == 3 and len(model.ridges) == 3
        assert len(model.bic_trace) == 3

    def test_bic_trace_indices_and_recompute(self) -> None:
        data = make_data(
            200, 5,
            lambda X, r: np.sin(2 * X[:, 0]) + 0.3 * r.standard_normal(200),
            seed=18,
        )
        cfg = make_config(q=3, ell=1, k_max=4, stopping="fixed_k")
        model = run_greedy(data, cfg, np.random.default_rng(11))
        taus = [t for t, _ in model.bic_trace]
        assert taus == [1, 2, 3, 4]
        n = data.X.shape[0]
        for (tau, bic), sse in zip(model.bic_trace, model.sse_trace):
            assert bic == bic_value(tau, sse, n, cfg.q, cfg.J, cfg.nu)

    def test_bic_stops_on_noise(self) -> None:
        hits = 0
        for seed in range(5):
            rng = np.random.default_rng(300 + seed)
            X = rng.uniform(-1.0, 1.0, (300, 10))
            y = rng.standard_normal(300)
            data = RunData(X=X, y=y, kv=make_uniform_knots(7, 3))
            cfg = make_config(q=6, ell=1, k_max=5, stopping="bic")
            model = run_greedy(data, cfg, np.random.default_rng(seed))
            hits += model.k == 1
            assert len(model.bic_trace) >= model.k
        assert hits >= 4

    def test_bic_keeps_signal_term(self) -> None:
        rng = np.random.default_rng(19)
        X = rng.uniform(-1.0, 1.0, (300, 6))
        theta = rng.standard_normal(6)
        theta /= np.linalg.norm(theta)
        y = np.sin(2.0 * X @ theta) + 0.1 * rng.standard_normal(300)
        data = RunData(X=X, y=y, kv=make_uniform_knots(7, 3))
        cfg = make_config(q=6, ell=1, k_max=5, stopping="bic")
        model = run_greedy(data, cfg, np.random.default_rng(12))
        assert model.k in (1, 2)
        # Discarding the last term must leave a good fit behind.
        resid = y - model.predict(X)
        rpe = float(resid @ resid) / float((y - y.mean()) @ (y - y.mean()))
        assert rpe < 0.1

    def test_at_least_one_term_kept(self) -> None:
        rng = np.random.default_rng(20)
        X = rng.uniform(-1.0, 1.0, (120, 2))
        y = rng.standard_normal(120)
        data = RunData(X=X, y=y, kv=make_uniform_knots(6, 3))
        cfg = make_config(q=1, ell=1, k_max=1, stopping="bic")
        model = run_greedy(data, cfg, np.random.default_rng(13))
        assert model.k == 1 and len(model.ridges) == 1

    def test_prediction_decomposes(self) -> None:
        for variant in ("aga", "oga", "rga"):
            data = make_data(
                200, 4,
                lambda X, r: np.sin(2 * X[:, 0]) + X[:, 3]
                + 0.1 * r.standard_normal(200),
                seed=21,
            )
            cfg = make_config(variant=variant, q=2, ell=2, k_max=3)
            model = run_greedy(data, cfg, np.random.default_rng(14))
            Xq = np.random.default_rng(22).uniform(-1.0, 1.0, (100, 4))
            total = np.full(100, model.intercept)
            for w, ridge in zip(model.weights, model.ridges):
                total += w * eval_ridge_batch(ridge, Xq)
            np.testing.assert_allclose(
                model.predict(Xq), total, atol=1e-10
            )

    def test_too_few_samples_rejected(self) -> None:
        data = RunData(
            X=np.zeros((8, 2)), y=np.zeros(8), kv=make_uniform_knots(7, 3)
        )
        cfg = make_config(q=2, ell=1, k_max=1)
        with pytest.raises(ConfigError, match="samples"):
            run_greedy(data, cfg, np.random.default_rng(15))


class TestFitPprFull:
    def test_k1_reduces_to_single_index_fit(self) -> None:
        rng = np.random.default_rng(23)
        X = rng.uniform(-1.0, 1.0, (250, 3))
        y = np.sin(2.0 * X @ np.array([0.6, 0.64, 0.48])) + 1.7
        kv = make_uniform_knots(7, 3)
        data = RunData(X=X, y=y, kv=kv)
        cfg = make_config(q=3, ell=1)
        model = fit_ppr_full(data, 1, cfg, np.random.default_rng(16))

        yc = y - y.mean()
        opts = SingleIndexOptions(rng=np.random.default_rng(16))
        ridge, _ = fit_single_index(X, yc, kv, opts)
        direct = y.mean() + eval_ridge_batch(ridge, X)
        np.testing.assert_allclose(model.predict(X), direct, atol=1e-10)

    def test_refinement_never_increases_sse(self) -> None:
        rng = np.random.default_rng(24)
        X = rng.uniform(-1.0, 1.0, (300, 4))
        y = (
            np.sin(2.5 * X @ np.array([1.0, 0.0, 0.0, 0.0]))
            + (X @ np.array([0.0, 0.8, 0.6, 0.0])) ** 2
            + 0.1 * rng.standard_normal(300)
        )
        kv = make_uniform_knots(7, 3)
        data = RunData(X=X, y=y, kv=kv)
        cfg = make_config(q=4, ell=1)
        model = fit_ppr_full(data, 2, cfg, np.random.default_rng(17))
        # The final recorded SSE reflects the refined fit and cannot
        # exceed the greedy-phase SSE.
        assert model.sse_trace[-1] <= model.sse_trace[1] * (1 + 1e-9)
        resid = y - model.predict(X)
        np.testing.assert_allclose(
            float(resid @ resid), model.sse_trace[-1], rtol=1e-8
        )

    def test_refinement_beats_plain_greedy(self) -> None:
        rng = np.random.default_rng(25)
        X = rng.uniform(-1.0, 1.0, (300, 3))
        y = (
            np.exp(X @ np.array([0.6, -0.8, 0.0]))
            + np.tanh(3.0 * X @ np.array([0.0, 0.6, 0.8]))
        )
        kv = make_uniform_knots(7, 3)
        data = RunData(X=X, y=y, kv=kv)
        cfg = make_config(q=3, ell=1, k_max=2, stopping="fixed_k")
        plain = run_greedy(data, cfg, np.random.default_rng(18))
        refined = fit_ppr_full(data, 2, cfg, np.random.default_rng(18))
        plain_sse = float(np.sum((y - plain.predict(X)) ** 2))
        refined_sse = float(np.sum((y - refined.predict(X)) ** 2))
        assert refined_sse <= plain_sse * (1 + 1e-9)

    def test_sample_size_guard(self) -> None:
        kv = make_uniform_knots(7, 3)
        data = RunData(X=np.zeros((30, 4)), y=np.zeros(30), kv=kv)
        with pytest.raises(ConfigError, match="samples"):
            fit_ppr_full(data, 3, make_config(), np.random.default_rng(19))
