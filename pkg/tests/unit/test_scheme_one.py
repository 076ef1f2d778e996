from fractions import Fraction

import numpy as np
import pytest

from ozmm import exceptions
from ozmm.generate import GeneratorKind, GeneratorSpec
from ozmm.numeric import MatrixF64, MultiWordMatrix
from ozmm.oracle import ExactMatrix, compare, exact_matmul
from ozmm.residue import GemmCounter
from ozmm.scheme_one import (
    SchemeOneConfig,
    SliceMode,
    ozaki1_error_curve,
    ozaki1_matmul,
    slice_width,
    split_slices,
)
from ozmm.split import Side
from tests import fixtures


def _exact_sum(parts, i, j):
    return sum(ExactMatrix.from_matrix(p).entry(i, j) for p in parts)


class TestSliceWidth:
    @pytest.mark.parametrize(
        "fixture_name,fixture",
        [("one", (1, 26)), ("two", (2, 26)), ("kilo", (1024, 21)), ("odd", (1025, 21)), ("mega", (2 ** 20, 16))],
    )
    def test_width(self, fixture_name, fixture):
        q, w = fixture
        assert slice_width(q) == w

    def test_too_deep(self):
        with pytest.raises(exceptions.SliceWidthError):
            slice_width(2 ** 52)


class TestSplitSlices:
    def test_single_slice_is_remainder(self, rng):
        A = MatrixF64(rng.standard_normal((3, 4)))
        d = split_slices(A, Side.LEFT, 1)
        assert d.slices == ()
        assert d.remainder is A
        assert d.k == 1

    def test_short_entries_fit_one_slice(self, rng):
        w = slice_width(8)
        A = MatrixF64(rng.integers(2 ** (w - 1), 2 ** w, size=(4, 8)) * 2.0 ** -w)
        d = split_slices(A, Side.LEFT, 3)
        assert d.slices[0].data.tolist() == A.data.tolist()
        assert not d.slices[1].data.any()
        assert not d.remainder.data.any()

    @pytest.mark.parametrize("fixture_name,fixture", [("rows", Side.LEFT), ("columns", Side.RIGHT)])
    def test_error_free(self, fixture_name, fixture, rng):
        A = MatrixF64(rng.standard_normal((5, 6)) * np.exp(2 * rng.standard_normal((5, 6))))
        d = split_slices(A, fixture, 4, q=64)
        parts = list(d.slices) + [d.remainder]
        for i in range(5):
            for j in range(6):
                assert _exact_sum(parts, i, j) == Fraction(A.data[i, j])

    def test_slices_shrink(self, rng):
        A = MatrixF64(rng.standard_normal((4, 16)))
        d = split_slices(A, Side.LEFT, 4)
        w = d.slice_width
        scale = 2.0 ** d.exponents.astype(np.float64)
        assert (np.abs(d.slices[0].data).max(axis=1) <= 2 * scale).all()
        for i, piece in enumerate(d.slices[1:], start=1):
            assert (np.abs(piece.data).max(axis=1) <= scale * 2.0 ** (-i * w)).all()

    def test_remainders(self, rng):
        A = MatrixF64(rng.standard_normal((3, 3)))
        d = split_slices(A, Side.LEFT, 3)
        assert d.remainders[0] is A
        assert d.remainders[-1] is d.remainder
        for i in range(3):
            for j in range(3):
                assert _exact_sum([d.slices[1], d.remainders[2]], i, j) == _exact_sum([d.remainders[1]], i, j)

    def test_multiword_input(self, rng):
        hi = rng.standard_normal((3, 4))
        A = MultiWordMatrix([hi, hi * 2.0 ** -60])
        d = split_slices(A, Side.RIGHT, 3, q=4)
        assert isinstance(d.remainder, MultiWordMatrix)
        parts = list(d.slices) + [d.remainder]
        for i in range(3):
            for j in range(4):
                assert _exact_sum(parts, i, j) == ExactMatrix.from_matrix(A).entry(i, j)

    def test_partial_products_exact(self, rng):
        n = 32
        A = MatrixF64(rng.standard_normal((n, n)))
        B = MatrixF64(rng.standard_normal((n, n)))
        da = split_slices(A, Side.LEFT, 4)
        db = split_slices(B, Side.RIGHT, 4)
        for Ai in da.slices:
            for Bj in db.slices:
                fast = MatrixF64(np.matmul(Ai.data, Bj.data))
                assert ExactMatrix.from_matrix(fast) == exact_matmul(Ai, Bj)

    def test_below_binary64_range(self):
        with pytest.raises(exceptions.ExponentRangeError):
            split_slices(MatrixF64([[2.0 ** -1060, 5e-324]]), Side.LEFT, 2)

    @pytest.mark.parametrize(
        "fixture_name,fixture,raises",
        [
            ("no_slices", {"side": Side.LEFT, "k": 0}, exceptions.PreconditionError),
            ("whole", {"side": Side.WHOLE, "k": 2}, exceptions.PreconditionError),
            ("bad_side", {"side": "diagonal", "k": 2}, exceptions.InvalidConfigurationError),
        ],
    )
    def test_errors(self, fixture_name, fixture, raises):
        with pytest.raises(raises):
            split_slices(MatrixF64([[1.0]]), fixture["side"], fixture["k"])


class TestOzaki1Matmul:
    @pytest.mark.parametrize("fixture_name,fixture", [("truncated", SliceMode.TRUNCATED), ("full", SliceMode.FULL)])
    def test_product_count(self, fixture_name, fixture, rng):
        A = MatrixF64(rng.standard_normal((6, 6)))
        B = MatrixF64(rng.standard_normal((6, 6)))
        for k, muls in fixtures.TABLE2_MULS.items():
            counter = GemmCounter()
            ozaki1_matmul(A, B, SchemeOneConfig(k), fixture, counter=counter)
            assert counter[GemmCounter.SLICE] == muls

    @pytest.mark.parametrize("fixture_name,fixture", [("truncated", SliceMode.TRUNCATED), ("full", SliceMode.FULL)])
    def test_identity(self, fixture_name, fixture):
        I = MatrixF64.identity(8)
        for k in (1, 2, 5):
            assert ozaki1_matmul(I, I, SchemeOneConfig(k), fixture).data.tolist() == I.data.tolist()

    def test_identity_times_integers(self, rng):
        B = MatrixF64(rng.integers(-(2 ** 20), 2 ** 20, size=(8, 5)).astype(np.float64))
        out = ozaki1_matmul(MatrixF64.identity(8), B, SchemeOneConfig(2))
        assert out.data.tolist() == B.data.tolist()

    def test_full_mode_exact_reduction(self, rng):
        A = MatrixF64(rng.standard_normal((7, 9)))
        B = MatrixF64(rng.standard_normal((9, 4)))
        out = ozaki1_matmul(A, B, SchemeOneConfig(3), SliceMode.FULL, words=3)
        expected = exact_matmul(A, B).to_multiword(3)
        for got, want in zip(out.words, expected.words):
            assert got.data.tolist() == want.data.tolist()

    def test_error_drops_with_k(self, rng):
        A = MatrixF64(rng.standard_normal((16, 16)))
        B = MatrixF64(rng.standard_normal((16, 16)))
        exact = exact_matmul(A, B)
        errors = [compare(ozaki1_matmul(A, B, SchemeOneConfig(k)), exact).max_rel_err for k in (1, 2, 3)]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 1e-10

    def test_asymmetric_counts(self, rng):
        A = MatrixF64(rng.standard_normal((4, 4)))
        counter = GemmCounter()
        ozaki1_matmul(A, A, SchemeOneConfig(3, 2), counter=counter)
        assert counter[GemmCounter.SLICE] == 5

    @pytest.mark.parametrize(
        "fixture_name,fixture,raises",
        [
            ("full_needs_square", {"config": SchemeOneConfig(3, 2), "mode": SliceMode.FULL}, exceptions.PreconditionError),
            ("no_slices", {"config": SchemeOneConfig(0), "mode": SliceMode.TRUNCATED}, exceptions.PreconditionError),
            ("bad_mode", {"config": SchemeOneConfig(2), "mode": "partial"}, exceptions.InvalidConfigurationError),
        ],
    )
    def test_errors(self, fixture_name, fixture, raises):
        A = MatrixF64([[1.0]])
        with pytest.raises(raises):
            ozaki1_matmul(A, A, fixture["config"], fixture["mode"])

    def test_shape_mismatch(self):
        with pytest.raises(exceptions.ShapeMismatchError):
            ozaki1_matmul(MatrixF64([[1.0, 2.0]]), MatrixF64([[1.0, 2.0]]), SchemeOneConfig(2))


class TestErrorCurve:
    def test_randn(self):
        spec = GeneratorSpec(GeneratorKind.RANDN, seed=11, rows=0, cols=0)
        rows = ozaki1_error_curve(32, "1..4", spec)
        assert [r.k for r in rows] == [1, 2, 3, 4]
        assert [r.muls for r in rows] == [1, 3, 6, 10]
        assert rows[1].max_rel_err < rows[0].max_rel_err
        assert rows[2].max_rel_err < rows[1].max_rel_err

    def test_constant_is_near_floor(self):
        spec = GeneratorSpec(GeneratorKind.CONSTANT, seed=0, rows=0, cols=0, constant=0.75)
        (row,) = ozaki1_error_curve(16, [2], spec)
        assert row.max_rel_err == 0.0
