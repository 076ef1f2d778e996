import pytest

from ozmm.generate import GeneratorKind, GeneratorSpec, generate
from ozmm.oracle import exact_matmul
from tests import fixtures


@pytest.fixture(scope="module")
def quad_pair():
    """randn 256x256 quad-word inputs with their exact product."""
    spec = GeneratorSpec(GeneratorKind.RANDN, fixtures.SEED, 256, 256, words=4)
    A, B = generate(spec), generate(spec._replace(seed=fixtures.SEED + 1))
    return A, B, exact_matmul(A, B)


@pytest.fixture(scope="module")
def phi_pair():
    spec = GeneratorSpec(GeneratorKind.PHI_LOGNORMAL, fixtures.SEED, 256, 256, phi=0.5)
    A, B = generate(spec), generate(spec._replace(seed=fixtures.SEED + 1))
    return A, B, exact_matmul(A, B)
