import json

import numpy as np
import pytest

from phnmf.linalg import SeededRng, ValidationError
from phnmf.nmf import (
    Factorization,
    NmfConfig,
    export_factorization,
    init_factors,
    mu_update_h,
    mu_update_w,
    nmf,
)


class TestConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValidationError):
            NmfConfig(rank=0)
        with pytest.raises(ValidationError):
            NmfConfig(rank=2, rel_tol=0.0)
        with pytest.raises(ValidationError):
            NmfConfig(rank=2, mu_epsilon=0.0)
        with pytest.raises(ValidationError):
            NmfConfig(rank=2, max_iters=0)


class TestInit:
    def test_shapes_and_positivity(self):
        w, h = init_factors(2, 3, 1, SeededRng(7))
        assert w.shape == (2, 1) and h.shape == (1, 3)
        for arr in (w, h):
            assert np.all(arr > 0.0) and np.all(arr <= 1.0)

    def test_deterministic(self):
        w1, h1 = init_factors(4, 5, 2, SeededRng(7))
        w2, h2 = init_factors(4, 5, 2, SeededRng(7))
        assert np.array_equal(w1, w2) and np.array_equal(h1, h2)

    def test_streams_differ(self):
        w1, _ = init_factors(4, 5, 2, SeededRng(7, 0))
        w2, _ = init_factors(4, 5, 2, SeededRng(7, 1))
        assert not np.array_equal(w1, w2)

    def test_rank_too_large(self):
        with pytest.raises(ValidationError):
            init_factors(2, 3, 4, SeededRng(0))


class TestMuUpdates:
    def test_h_fixed_point(self):
        gen = np.random.default_rng(0)
        w = gen.random((4, 2)) + 0.1
        h = gen.random((2, 5)) + 0.1
        x = w @ h
        h2 = mu_update_h(x, w, h, 1e-15)
        assert np.allclose(h2, h, rtol=1e-10)

    def test_h_scalar(self):
        eps = 1e-12
        x = np.array([[2.0]])
        w = np.array([[1.0]])
        h = np.array([[1.0]])
        out = mu_update_h(x, w, h, eps)
        assert out[0, 0] == pytest.approx(2.0 / (1.0 + eps))

    def test_h_zero_row_preserved(self):
        gen = np.random.default_rng(1)
        w = gen.random((4, 2)) + 0.1
        h = gen.random((2, 5)) + 0.1
        h[1] = 0.0
        out = mu_update_h(gen.random((4, 5)), w, h, 1e-12)
        assert np.array_equal(out[1], np.zeros(5))

    def test_w_fixed_point(self):
        gen = np.random.default_rng(2)
        w = gen.random((4, 2)) + 0.1
        h = gen.random((2, 5)) + 0.1
        x = w @ h
        w2 = mu_update_w(x, w, h, 1e-15)
        assert np.allclose(w2, w, rtol=1e-10)

    def test_w_scalar(self):
        eps = 1e-12
        out = mu_update_w(np.array([[4.0]]), np.array([[1.0]]), np.array([[2.0]]), eps)
        assert out[0, 0] == pytest.approx(8.0 / (4.0 + eps))

    def test_w_zero_column_preserved(self):
        gen = np.random.default_rng(3)
        w = gen.random((4, 2)) + 0.1
        w[:, 0] = 0.0
        h = gen.random((2, 5)) + 0.1
        out = mu_update_w(gen.random((4, 5)), w, h, 1e-12)
        assert np.array_equal(out[:, 0], np.zeros(4))


class TestNmf:
    def test_rank_one_exact(self):
        x = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])
        fact = nmf(x, NmfConfig(rank=1, seed=3))
        assert fact.relative_residual(x) <= 1e-4

    def test_zero_matrix(self):
        fact = nmf(np.zeros((4, 4)), NmfConfig(rank=2, seed=1))
        assert fact.objective_history[0] == 0.0
        assert np.array_equal(fact.W @ fact.H, np.zeros((4, 4)))

    def test_negative_input_rejected(self):
        with pytest.raises(ValidationError):
            nmf(np.array([[1.0, -0.5]]), NmfConfig(rank=1))

    def test_rank_exceeds_dims(self):
        with pytest.raises(ValidationError):
            nmf(np.ones((2, 3)), NmfConfig(rank=3))

    def test_objective_monotone(self):
        gen = np.random.default_rng(4)
        for trial in range(20):
            x = gen.random((12, 9))
            fact = nmf(x, NmfConfig(rank=3, seed=trial, max_iters=60))
            diffs = np.diff(fact.objective_history)
            assert np.all(diffs <= 1e-10)

    def test_nonnegativity(self):
        gen = np.random.default_rng(5)
        x = gen.random((10, 8))
        fact = nmf(x, NmfConfig(rank=2, seed=9))
        assert np.all(fact.W >= 0.0) and np.all(fact.H >= 0.0)

    def test_bitwise_determinism(self):
        gen = np.random.default_rng(6)
        x = gen.random((15, 10))
        a = nmf(x, NmfConfig(rank=3, seed=42))
        b = nmf(x, NmfConfig(rank=3, seed=42))
        assert np.array_equal(a.W, b.W)
        assert np.array_equal(a.H, b.H)
        assert np.array_equal(a.objective_history, b.objective_history)
        assert a.iterations_run == b.iterations_run
        assert a.converged == b.converged

    def test_scale_consistency(self):
        gen = np.random.default_rng(7)
        x = gen.random((20, 15))
        base = nmf(x, NmfConfig(rank=3, seed=2)).relative_residual(x)
        scaled = nmf(7.3 * x, NmfConfig(rank=3, seed=2)).relative_residual(7.3 * x)
        assert scaled == pytest.approx(base, rel=0.10)

    def test_synthetic_rank_four_residual(self):
        from phnmf.synthetic import SyntheticSpec, gen_continuous

        ds = gen_continuous(SyntheticSpec(seed=1))
        fact = nmf(ds.X, NmfConfig(rank=4, seed=11))
        # pilot run measured ~0.013; the bound leaves an order of magnitude
        assert fact.relative_residual(ds.X) <= 0.15

    def test_convergence_flag_and_history_length(self):
        x = np.outer([1.0, 2.0], [1.0, 1.0, 2.0])
        fact = nmf(x, NmfConfig(rank=1, seed=0, max_iters=200))
        assert fact.converged
        assert fact.iterations_run == len(fact.objective_history)


class TestExport:
    def test_directory_contents(self, tmp_path):
        x = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])
        fact = nmf(x, NmfConfig(rank=1, seed=3))
        out = tmp_path / "fact"
        export_factorization(fact, out)
        assert (out / "W.csv").exists() and (out / "H.csv").exists()
        meta = json.loads((out / "meta.json").read_text())
        assert meta["rank"] == 1
        assert meta["seed"] == 3
        assert meta["iterations"] == fact.iterations_run
        assert meta["final_objective"] == pytest.approx(fact.objective())
