from enum import Enum
from typing import NamedTuple, Tuple, Union

import numpy as np

from ozmm import utils
from ozmm.exceptions import InvalidConfigurationError
from ozmm.numeric import UNIT_ROUNDOFF, MatrixF64, MultiWordMatrix


class GeneratorKind(Enum):
    RANDN = "randn"
    PHI_LOGNORMAL = "phi"
    CONSTANT = "constant"
    INTEGER_UNIFORM = "integer"


class GeneratorSpec(NamedTuple):
    """Seeded description of a test matrix.

    Args:
        kind (GeneratorKind): entry distribution
        seed (int): PCG64 seed
        rows (int):
        cols (int):
        phi (float): exponent spread of PHI_LOGNORMAL
        constant (float): value of every CONSTANT entry
        int_range (tuple): inclusive bounds of INTEGER_UNIFORM
        words (int): words per entry; extra words are random tails below the leading one
    """

    kind: GeneratorKind
    seed: int
    rows: int
    cols: int
    phi: float = 0.5
    constant: float = 1.0
    int_range: Tuple[int, int] = (-8, 8)
    words: int = 1


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def _leading(spec: GeneratorSpec, kind: GeneratorKind, rng: np.random.Generator) -> np.ndarray:
    shape = (spec.rows, spec.cols)
    if kind is GeneratorKind.RANDN:
        return rng.standard_normal(shape)
    if kind is GeneratorKind.PHI_LOGNORMAL:
        # rand is uniform on (0, 1]
        rand = 1.0 - rng.random(shape)
        return (rand - 0.5) * np.exp(spec.phi * rng.standard_normal(shape))
    if kind is GeneratorKind.CONSTANT:
        return np.full(shape, float(spec.constant))
    lo, hi = (int(v) for v in spec.int_range)
    if lo > hi:
        raise InvalidConfigurationError(f"Empty integer range {spec.int_range}.")
    return rng.integers(lo, hi, size=shape, endpoint=True).astype(np.float64)


def generate(spec: GeneratorSpec) -> Union[MatrixF64, MultiWordMatrix]:
    """Draw the matrix described by `spec`; the same spec always gives the same bits."""
    if spec.rows < 0 or spec.cols < 0 or spec.words < 1:
        raise InvalidConfigurationError(f"Invalid generator shape: {spec}")
    kind = utils.get_enum_value(GeneratorKind, spec.kind)
    rng = _rng(spec.seed)
    words = [_leading(spec, kind, rng)]
    for _ in range(spec.words - 1):
        xi = 2.0 * rng.random(words[0].shape) - 1.0
        words.append(words[-1] * UNIT_ROUNDOFF * xi)
    if spec.words == 1:
        return MatrixF64(words[0])
    return MultiWordMatrix(words)
