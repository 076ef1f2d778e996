import math
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple, Union

import gmpy2
import numpy as np

from ozmm import utils
from ozmm.crt import CrtTable, Regime
from ozmm.exceptions import BudgetError, ShapeMismatchError
from ozmm.numeric import (
    BigIntMatrix,
    IntegerMatrix8,
    Matrix,
    as_stack,
    exact_components,
    floor_log2_components,
    matrix_symmetric_mod,
    vshift_round,
    vshift_trunc,
)
from ozmm.reconstruct import accumulate_and_reduce
from ozmm.residue import BackendKind, GemmCounter, iter_residue_products


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"
    WHOLE = "whole"


class BoundMethod(Enum):
    NAIVE = "naive"
    CAUCHY_SCHWARZ = "cauchy-schwarz"
    MAGNITUDE_PRODUCT = "magnitude-product"


class BudgetMode(Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"


class Rounding(Enum):
    TRUNCATE = "trunc"
    NEAREST = "round"


class BoundEstimate(NamedTuple):
    c_max: int
    method: BoundMethod


class SplitPlan(NamedTuple):
    """Budgets and power-of-two exponents of one scheme-II product.

    `k_a`/`k_b` are the planned budgets; `extra_a`/`extra_b` are bits granted
    afterwards by a tighter bound.
    """

    k_a: int
    k_b: int
    row_exponents: np.ndarray
    col_exponents: np.ndarray
    s: int
    table: CrtTable
    q: int
    extra_a: int = 0
    extra_b: int = 0

    @property
    def bits_a(self) -> int:
        return self.k_a + self.extra_a

    @property
    def bits_b(self) -> int:
        return self.k_b + self.extra_b

    def check(self) -> "SplitPlan":
        if 2 * self.q << (self.k_a + self.k_b) >= self.table.M:
            raise BudgetError(
                f"Budgets k_a={self.k_a}, k_b={self.k_b} break the window for q={self.q}."
            )
        return self


class ScaledIntPair(NamedTuple):
    a_prime: BigIntMatrix
    b_prime: BigIntMatrix
    plan: SplitPlan


# PLANNING


def budget_total(M: int, q: int) -> int:
    """floor(log2((M/2 - 1) / q)), the largest admissible k_A + k_B."""
    M, q = int(M), int(q)
    if q < 1 or M < 2 * q + 2:
        raise BudgetError(f"M={M} is too small for inner dimension q={q}.")
    return utils.floor_log2_ratio(M - 2, 2 * q)


def plan_budgets(
    M: int, q: int, mode=BudgetMode.SYMMETRIC, fraction: float = 0.5
) -> Tuple[int, int]:
    """Split the exponent budget between A and B.

    >>> plan_budgets(105, 2)
    (2, 2)
    """
    total = budget_total(M, q)
    mode = utils.get_enum_value(BudgetMode, mode)
    if mode is BudgetMode.SYMMETRIC:
        k_a = k_b = total // 2
    else:
        if not 0 < fraction < 1:
            raise BudgetError(f"Asymmetric fraction must lie in (0, 1), got {fraction}.")
        k_a = math.floor(total * fraction)
        k_b = total - k_a
    if min(k_a, k_b) < 1:
        raise BudgetError(f"M={M} leaves no bits for q={q} (k_A={k_a}, k_B={k_b}).")
    return k_a, k_b


def plan_budgets_three(M: int, q: int, r: int) -> Tuple[int, int, int]:
    M, q, r = int(M), int(q), int(r)
    if q < 1 or r < 1 or M - 2 < 2 * q * r:
        raise BudgetError(f"M={M} is too small for q={q}, r={r}.")
    k = utils.floor_log2_ratio(M - 2, 2 * q * r) // 3
    return k, k, k


# SCALING


def _scale_rows(N, L, k: int, rounding: Rounding, whole: bool):
    top = floor_log2_components(N, L)
    nonzero = N != 0
    if whole:
        exps = np.array(k - 1 - int(top.max()) if nonzero.any() else 0, dtype=np.int64)
        shifts = L + exps
    else:
        has = nonzero.any(axis=1)
        row_top = np.where(has, top.max(axis=1, initial=np.iinfo(np.int64).min), k - 1)
        exps = np.where(has, k - 1 - row_top, 0).astype(np.int64)
        shifts = L + exps[:, np.newaxis]
    shift = vshift_round if rounding is Rounding.NEAREST else vshift_trunc
    return np.asarray(shift(N, shifts), dtype=object), exps


def scale_and_truncate(
    A: Matrix, side, k: int, rounding=Rounding.TRUNCATE
) -> Tuple[BigIntMatrix, Union[np.ndarray, int]]:
    """Scale rows (LEFT), columns (RIGHT) or the whole matrix by powers of two and round to integers.

    The exponent of each row is chosen so its largest magnitude lands in
    [2**(k-1), 2**k). Multi-word inputs are summed exactly before rounding.
    Returns the integer matrix and the exponents (an int for WHOLE).
    """
    if k < 1:
        raise BudgetError(f"Bit budget must be at least 1, got {k}.")
    side = utils.get_enum_value(Side, side)
    rounding = utils.get_enum_value(Rounding, rounding)
    A.check_finite()
    stack = as_stack(A)
    if side is Side.RIGHT:
        stack = stack.transpose(0, 2, 1)
    N, L = exact_components(stack)
    ints, exps = _scale_rows(N, L, k, rounding, whole=side is Side.WHOLE)
    if side is Side.RIGHT:
        ints = ints.T
    if side is Side.WHOLE:
        exps = int(exps)
    return BigIntMatrix(ints), exps


# BOUNDS


def _bits_for(X: BigIntMatrix) -> int:
    largest = X.max_abs()
    return (largest - 1).bit_length() if largest > 1 else 0


def _isqrt_ceil(n: int) -> int:
    root, rem = gmpy2.isqrt_rem(n)
    return int(root) + (1 if rem > 0 else 0)


def _magnitude_product(
    a_abs: BigIntMatrix,
    b_abs: BigIntMatrix,
    table: Optional[CrtTable],
    backend,
    counter: Optional[GemmCounter],
) -> int:
    q = a_abs.cols
    fits = table is not None and 2 * q * a_abs.max_abs() * b_abs.max_abs() < table.M
    if fits and backend is not None:
        products = []
        for product in iter_residue_products(a_abs, b_abs, table, backend):
            if counter is not None:
                counter.count(GemmCounter.BOUND)
            products.append(product)
        exact = accumulate_and_reduce(products, table)
    else:
        if counter is not None:
            counter.count(GemmCounter.BOUND)
        exact = a_abs.matmul(b_abs)
    return exact.max_abs()


def estimate_bound(
    a_prime: BigIntMatrix,
    b_prime: BigIntMatrix,
    method,
    k_a: int = None,
    k_b: int = None,
    table: CrtTable = None,
    backend=None,
    counter: GemmCounter = None,
) -> BoundEstimate:
    """Upper bound on max (|A'| |B'|)_ij.

    MagnitudeProduct is exact. With a table and backend it runs through the
    residue products (valid whenever q * max|A'| * max|B'| < M/2), otherwise
    through the arbitrary-precision product.
    """
    if a_prime.cols != b_prime.rows:
        raise ShapeMismatchError(f"Cannot bound {a_prime.shape} times {b_prime.shape}.")
    method = utils.get_enum_value(BoundMethod, method)
    q = a_prime.cols

    if method is BoundMethod.NAIVE:
        k_a = _bits_for(a_prime) if k_a is None else k_a
        k_b = _bits_for(b_prime) if k_b is None else k_b
        c_max = q << (k_a + k_b)
    elif method is BoundMethod.CAUCHY_SCHWARZ:
        a, b = a_prime.data, b_prime.data
        rows = (a * a).sum(axis=1) if a.size else np.zeros(1, dtype=object)
        cols = (b * b).sum(axis=0) if b.size else np.zeros(1, dtype=object)
        c_max = _isqrt_ceil(int(rows.max()) * int(cols.max()))
    else:
        c_max = _magnitude_product(
            a_prime.abs(), b_prime.abs(), table, backend, counter
        )
    return BoundEstimate(int(c_max), method)


def extra_bits(bound: BoundEstimate, M: int, row_sum_a: int, col_sum_b: int, q: int):
    """Bits that can be added to the budgets while the window provably holds.

    Raising by d bits gives |A''||B''| <= 2**d (|A'||B'| + |A'| 1 + 1 |B'| + 1 1),
    so c_max'' <= 2**d (c_max + row_sum_a + col_sum_b + q).
    Returns (d, certified c_max'').
    """
    c = bound.c_max
    if c <= 0:
        return 0, c
    d = (M // (2 * c)).bit_length() - 2
    while d > 0:
        certified = (c + row_sum_a + col_sum_b + q) << d
        if 2 * certified < M:
            return d, certified
        d -= 1
    return 0, c


def tighten_budgets(
    A: Matrix, B: Matrix, pair: ScaledIntPair, bound: BoundEstimate, rounding=Rounding.TRUNCATE
) -> Tuple[ScaledIntPair, BoundEstimate]:
    """Spend the slack between 2 c_max and M on extra budget bits, split evenly."""
    plan = pair.plan
    a_abs, b_abs = pair.a_prime.abs().data, pair.b_prime.abs().data
    row_sum = int(a_abs.sum(axis=1).max()) if a_abs.size else 0
    col_sum = int(b_abs.sum(axis=0).max()) if b_abs.size else 0
    d, certified = extra_bits(bound, plan.table.M, row_sum, col_sum, plan.q)
    if d <= 0:
        return pair, bound
    d_a = d // 2
    d_b = d - d_a
    a_prime, row_exps = scale_and_truncate(A, Side.LEFT, plan.bits_a + d_a, rounding)
    b_prime, col_exps = scale_and_truncate(B, Side.RIGHT, plan.bits_b + d_b, rounding)
    plan = plan._replace(
        row_exponents=row_exps,
        col_exponents=col_exps,
        extra_a=plan.extra_a + d_a,
        extra_b=plan.extra_b + d_b,
    )
    return ScaledIntPair(a_prime, b_prime, plan), BoundEstimate(certified, bound.method)


# RESIDUES


def residues_of(X: BigIntMatrix, table: CrtTable) -> List[Union[IntegerMatrix8, BigIntMatrix]]:
    """Symmetric residues of X for every modulus; 8-bit storage in the INT8 regime."""
    int8 = table.modulus_set.regime is Regime.INT8
    out = []
    for m in table.moduli:
        r = matrix_symmetric_mod(X, m)
        out.append(IntegerMatrix8(r) if int8 else r)
    return out
