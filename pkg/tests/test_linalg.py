import numpy as np
import pytest

from phnmf.linalg import (
    SeededRng,
    ShapeError,
    ValidationError,
    ZeroVectorWarning,
    as_matrix,
    cosine_matrix,
    cosine_similarity,
    derive_seed,
    frobenius_norm,
    load_matrix_bin,
    load_matrix_csv,
    matmul,
    save_matrix_bin,
    save_matrix_csv,
)


def naive_matmul(a, b):
    """Triple-loop oracle."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for l in range(a.shape[1]):
                out[i, j] += a[i, l] * b[l, j]
    return out


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(matmul(np.eye(2), a), a)

    def test_hand_case(self):
        a = [[1.0, 2.0], [3.0, 4.0]]
        b = [[5.0], [6.0]]
        expected = naive_matmul(a, b)
        assert np.array_equal(expected, np.array([[17.0], [39.0]]))
        assert np.allclose(matmul(a, b), expected)

    def test_zero_annihilates(self):
        a = np.arange(6.0).reshape(2, 3) + 1
        assert np.array_equal(matmul(a, np.zeros((3, 4))), np.zeros((2, 4)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(np.ones((2, 3)), np.ones((2, 3)))

    def test_associativity(self):
        gen = np.random.default_rng(7)
        for _ in range(20):
            a = gen.random((4, 3))
            b = gen.random((3, 5))
            c = gen.random((5, 2))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            assert np.allclose(left, right, rtol=1e-9)


class TestFrobenius:
    def test_zero(self):
        assert frobenius_norm(np.zeros((3, 2))) == 0.0

    def test_three_four_five(self):
        assert frobenius_norm([[3.0, 4.0]]) == pytest.approx(5.0)

    def test_identity_three(self):
        assert frobenius_norm(np.eye(3)) == pytest.approx(np.sqrt(3.0))

    def test_trace_identity(self):
        gen = np.random.default_rng(3)
        for _ in range(10):
            a = gen.standard_normal((5, 4))
            lhs = frobenius_norm(a) ** 2
            rhs = np.trace(a.T @ a)
            assert lhs == pytest.approx(rhs, rel=1e-9)


class TestCosine:
    def test_self_similarity(self):
        u = np.array([2.0, 1.0, 0.5])
        assert cosine_similarity(u, u) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)

    def test_closed_form(self):
        assert cosine_similarity([1.0, 0.0], [1.0, 1.0]) == pytest.approx(
            1.0 / np.sqrt(2.0), abs=1e-9
        )

    def test_zero_vector_warns_and_returns_zero(self):
        with pytest.warns(ZeroVectorWarning):
            out = cosine_similarity([0.0, 0.0], [1.0, 2.0])
        assert out == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            cosine_similarity([1.0], [1.0, 2.0])

    def test_symmetry_and_scale_invariance(self):
        gen = np.random.default_rng(11)
        for _ in range(20):
            u = gen.standard_normal(6)
            v = gen.standard_normal(6)
            a, b = gen.uniform(0.1, 10.0, size=2)
            assert cosine_similarity(u, v) == pytest.approx(
                cosine_similarity(v, u), abs=1e-12
            )
            assert cosine_similarity(a * u, b * v) == pytest.approx(
                cosine_similarity(u, v), abs=1e-12
            )

    def test_cosine_matrix_zero_rows(self):
        a = np.array([[1.0, 0.0], [0.0, 0.0]])
        b = np.array([[1.0, 0.0]])
        with pytest.warns(ZeroVectorWarning):
            c = cosine_matrix(a, b)
        assert c[0, 0] == pytest.approx(1.0)
        assert c[1, 0] == 0.0


class TestValidation:
    def test_rejects_nan(self):
        with pytest.raises(ValidationError):
            as_matrix([[1.0, np.nan]])

    def test_rejects_1d(self):
        with pytest.raises(ShapeError):
            as_matrix([1.0, 2.0])

    def test_rejects_empty(self):
        with pytest.raises(ShapeError):
            as_matrix(np.empty((0, 3)))


class TestSerialization:
    def test_csv_roundtrip_bitwise(self, tmp_path):
        gen = np.random.default_rng(5)
        x = gen.random((7, 4)) * 1e3
        x[0, 0] = 1.0 / 3.0
        path = tmp_path / "m.csv"
        save_matrix_csv(x, path)
        back = load_matrix_csv(path)
        assert np.array_equal(back, x)
        save_matrix_csv(back, tmp_path / "m2.csv")
        assert (tmp_path / "m.csv").read_bytes() == (tmp_path / "m2.csv").read_bytes()

    def test_csv_integer_tokens(self, tmp_path):
        x = np.array([[0.0, 1.0], [1.0, 0.0]])
        path = tmp_path / "b.csv"
        save_matrix_csv(x, path)
        tokens = set(path.read_text().replace("\n", ",").strip(",").split(","))
        assert tokens == {"0", "1"}
        assert np.array_equal(load_matrix_csv(path), x)

    def test_csv_no_header_dot_decimal(self, tmp_path):
        path = tmp_path / "m.csv"
        save_matrix_csv([[0.5, 1.25]], path)
        line = path.read_text().splitlines()[0]
        assert line == "0.5,1.25"

    def test_bin_roundtrip(self, tmp_path):
        gen = np.random.default_rng(6)
        x = gen.standard_normal((5, 3)) ** 2
        path = tmp_path / "m.bin"
        save_matrix_bin(x, path)
        blob = path.read_bytes()
        assert blob[:4] == b"PHNM"
        assert int.from_bytes(blob[4:12], "little") == 5
        assert int.from_bytes(blob[12:20], "little") == 3
        assert np.array_equal(load_matrix_bin(path), x)

    def test_bin_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(ValidationError):
            load_matrix_bin(path)

    def test_bin_truncated(self, tmp_path):
        path = tmp_path / "short.bin"
        save_matrix_bin(np.ones((2, 2)), path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValidationError):
            load_matrix_bin(path)


class TestSeededRng:
    def test_same_stream_identical(self):
        a = SeededRng(42, 3).generator().random(10)
        b = SeededRng(42, 3).generator().random(10)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = SeededRng(42, 0).generator().random(10)
        b = SeededRng(42, 1).generator().random(10)
        assert not np.array_equal(a, b)

    def test_substream_derivation(self):
        child = SeededRng(42, 0).stream(5)
        again = SeededRng(42, 0).stream(5)
        assert child == again
        assert child != SeededRng(42, 0).stream(6)

    def test_derive_seed_stable_and_distinct(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        assert derive_seed(1, 2, 3) != derive_seed(1, 2, 4)
        assert derive_seed(1, 2) != derive_seed(2, 2)

    def test_validation(self):
        with pytest.raises(ValidationError):
            SeededRng(-1)
        with pytest.raises(ValidationError):
            SeededRng(0, -2)
