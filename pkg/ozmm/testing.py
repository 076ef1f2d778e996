import numpy as np

from ozmm.numeric import BigIntMatrix, MatrixF64
from ozmm.split import BoundEstimate


def random_int_matrix(rng: np.random.Generator, rows: int, cols: int, bound: int) -> BigIntMatrix:
    """Uniform integers in [-bound, bound], exact as Python ints."""
    bound = int(bound)
    if bound < 2 ** 62:
        return BigIntMatrix(rng.integers(-bound, bound, size=(rows, cols), endpoint=True))
    # Wider than int64: assemble from 62-bit limbs.
    limbs = (bound.bit_length() + 61) // 62
    data = np.zeros((rows, cols), dtype=object)
    for _ in range(limbs):
        data = data * (1 << 62) + rng.integers(0, 1 << 62, size=(rows, cols)).astype(object)
    data = data % (2 * bound + 1) - bound
    return BigIntMatrix(data)


def in_budget_pair(rng: np.random.Generator, p: int, q: int, r: int, k_a: int, k_b: int):
    """Integer-valued binary64 matrices whose entries fit in k_a and k_b bits.

    Scaling such matrices by the planned budgets is exact, so the emulated
    product must equal the exact one.
    """
    a = rng.integers(-(2 ** k_a - 1), 2 ** k_a - 1, size=(p, q), endpoint=True)
    b = rng.integers(-(2 ** k_b - 1), 2 ** k_b - 1, size=(q, r), endpoint=True)
    return MatrixF64(a.astype(np.float64)), MatrixF64(b.astype(np.float64))


def corrupt_plan(plan):
    """Copy of an Ozaki2Plan whose bound breaks the uniqueness window (2 * c_max >= M)."""
    M = plan.table.M
    return plan._replace(bound=BoundEstimate(M // 2 + 1, plan.bound.method))