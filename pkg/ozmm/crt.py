from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import List, NamedTuple, Optional, Sequence, Tuple

import gmpy2
import numpy as np

from ozmm import utils
from ozmm.exceptions import ModulusError, PreconditionError, ShapeMismatchError
from ozmm.numeric import BigIntMatrix, matrix_symmetric_mod


class Regime(Enum):
    INT8 = "int8"
    FP64 = "fp64"


# Stored moduli for the INT8 path, s = 16.
INT8_MODULI = (256, 255, 253, 251, 247, 239, 233, 229, 227, 223, 217, 211, 199, 197, 193, 191)

# q * m**2 <= 2**55 keeps every FP64 residue product exact.
FP64_PRODUCT_BITS = 55


class ModulusSet(NamedTuple):
    moduli: Tuple[int, ...]
    regime: Optional[Regime] = None
    q_max: Optional[int] = None

    @classmethod
    def custom(cls, moduli: Sequence[int]) -> "ModulusSet":
        return cls(tuple(int(m) for m in moduli))

    @property
    def s(self) -> int:
        return len(self.moduli)

    def ratio(self) -> float:
        """m_s / m_1."""
        return self.moduli[-1] / self.moduli[0]


class CrtTable(NamedTuple):
    modulus_set: ModulusSet
    M: int
    cofactors: Tuple[int, ...]
    inverses: Tuple[int, ...]
    weights: Tuple[int, ...]

    @property
    def moduli(self) -> Tuple[int, ...]:
        return self.modulus_set.moduli

    @property
    def s(self) -> int:
        return self.modulus_set.s

    def log2_M(self) -> float:
        return float(gmpy2.log2(self.M))


@lru_cache(maxsize=None)
def int8_modulus_chain() -> Tuple[int, ...]:
    """The stored table followed by a greedy coprime descent below its last entry."""
    chain = list(INT8_MODULI)
    for candidate in range(INT8_MODULI[-1] - 1, 1, -1):
        if all(gmpy2.gcd(candidate, m) == 1 for m in chain):
            chain.append(candidate)
    return tuple(chain)


def build_int8_modulus_set(s: int) -> ModulusSet:
    chain = int8_modulus_chain()
    if not 1 <= s <= len(chain):
        raise ModulusError(f"INT8 regime supports 1 <= s <= {len(chain)}, got {s}.")
    return ModulusSet(chain[:s], Regime.INT8)


def fp64_prime_bound(q_max: int) -> int:
    """Exclusive upper bound for FP64 moduli given the largest inner dimension."""
    exponent = (FP64_PRODUCT_BITS - utils.ceil_log2(q_max)) // 2
    return 1 << exponent if exponent > 0 else 1


@lru_cache(maxsize=256)
def build_fp64_modulus_set(s: int, q_max: int) -> ModulusSet:
    if s < 1 or q_max < 1:
        raise ModulusError(f"Need s >= 1 and q_max >= 1, got s={s}, q_max={q_max}.")
    moduli = []
    candidate = fp64_prime_bound(q_max) - 1
    while len(moduli) < s and candidate >= 2:
        if gmpy2.is_prime(candidate):
            moduli.append(candidate)
        candidate -= 1
    if len(moduli) < s:
        raise ModulusError(
            f"Only {len(moduli)} primes satisfy q_max * m**2 <= 2**{FP64_PRODUCT_BITS} for q_max={q_max}."
        )
    return ModulusSet(tuple(moduli), Regime.FP64, q_max)


def build_modulus_set(regime, s: int, q_max: int = None) -> ModulusSet:
    regime = utils.get_enum_value(Regime, regime)
    if regime is Regime.INT8:
        return build_int8_modulus_set(s)
    return build_fp64_modulus_set(s, q_max or 1)


@lru_cache(maxsize=256)
def build_crt_table(ms: ModulusSet) -> CrtTable:
    moduli = ms.moduli
    if not moduli or any(m < 2 for m in moduli):
        raise ModulusError(f"Moduli must be integers >= 2: {moduli}")
    for a, b in combinations(moduli, 2):
        if gmpy2.gcd(a, b) != 1:
            raise ModulusError(f"Moduli {a} and {b} are not coprime.")

    M = 1
    for m in moduli:
        M *= m
    cofactors, inverses, weights = [], [], []
    for m in moduli:
        Mi = M // m
        g, x, _ = gmpy2.gcdext(Mi % m, m)
        if g != 1:
            raise ModulusError(f"Cofactor of {m} is not invertible.")
        y = int(x) % m
        cofactors.append(Mi)
        inverses.append(y)
        weights.append(Mi * y)
    return CrtTable(ms, M, tuple(cofactors), tuple(inverses), tuple(weights))


def crt_reconstruct(
    residues: List[BigIntMatrix], table: CrtTable, strict: bool = False
) -> BigIntMatrix:
    """Combine one residue matrix per modulus into the representative in [-M/2, M/2].

    Residues may be symmetric or least nonnegative, i.e. in [-m/2, m).
    With `strict`, only symmetric residues (|entry| <= m/2) are accepted.
    """
    if len(residues) != table.s:
        raise ShapeMismatchError(f"Expected {table.s} residue matrices, got {len(residues)}.")
    shape = residues[0].shape
    total = np.zeros(shape, dtype=object)
    for r, m, w in zip(residues, table.moduli, table.weights):
        if r.shape != shape:
            raise ShapeMismatchError(f"Residue shape {r.shape} differs from {shape}.")
        if r.data.size:
            low, high = 2 * int(r.data.min()), int(r.data.max())
            if strict and (low < -m or 2 * high > m):
                raise PreconditionError(f"Residue outside [-{m}/2, {m}/2].")
            if low < -m or high >= m:
                raise PreconditionError(f"Residue outside [-{m}/2, {m}).")
        total = total + r.data * w
    return matrix_symmetric_mod(BigIntMatrix(total), table.M)
