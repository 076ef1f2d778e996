from typing import Any, NamedTuple, Union

import ozmm.logging
from ozmm import normalize, utils
from ozmm.crt import CrtTable, Regime, build_crt_table, build_modulus_set
from ozmm.exceptions import AmbiguityError, ShapeMismatchError
from ozmm.numeric import MatrixF64, MultiWordMatrix
from ozmm.reconstruct import (
    ReconstructedMatrix,
    ResidueAccumulator,
    check_uniqueness,
    inverse_scale_to_f64,
    inverse_scale_to_multiword,
)
from ozmm.residue import (
    BackendKind,
    GemmCounter,
    ResidueProduct,
    check_backend,
    iter_residue_products,
    multiply_three_residues,
    residue_matrix,
)
from ozmm.split import (
    BoundEstimate,
    BoundMethod,
    BudgetMode,
    Rounding,
    ScaledIntPair,
    Side,
    SplitPlan,
    estimate_bound,
    plan_budgets,
    plan_budgets_three,
    scale_and_truncate,
    tighten_budgets,
)

DEFAULT_BACKEND = {Regime.INT8: BackendKind.INT8SIM, Regime.FP64: BackendKind.FP64EXACT}


class Ozaki2Plan(NamedTuple):
    """Everything execute_plan needs; built by plan_ozaki2.

    Args:
        pair (ScaledIntPair): A' and B' with their SplitPlan
        bound (BoundEstimate): certified bound on max(|A'||B'|)
        backend (BackendKind): exact residue GEMM backend
        output_words (int): 1 for binary64 output, v for a v-word result
        counter (GemmCounter): GEMM tallies for this call
        logger:
    """

    pair: ScaledIntPair
    bound: BoundEstimate
    backend: BackendKind
    output_words: int
    counter: GemmCounter
    logger: Any = None

    @property
    def table(self) -> CrtTable:
        return self.pair.plan.table

    @property
    def split(self) -> SplitPlan:
        return self.pair.plan


def _table_for(regime: Regime, s: int, q_max: int) -> CrtTable:
    return build_crt_table(build_modulus_set(regime, s, q_max))


def plan_ozaki2(
    A,
    B,
    s: int,
    regime=Regime.FP64,
    backend=None,
    bound_method=BoundMethod.NAIVE,
    output_words: int = 1,
    q_max: int = None,
    budget_mode=BudgetMode.SYMMETRIC,
    fraction: float = 0.5,
    rounding=Rounding.TRUNCATE,
    tighten: bool = True,
    counter: GemmCounter = None,
    logger=None,
) -> Ozaki2Plan:
    """Part 1: pick moduli and budgets, scale and truncate, bound the product.

    Args:
        A, B: MatrixF64 or MultiWordMatrix (arrays are accepted and normalized)
        s (int): number of moduli, which is also the number of residue GEMMs
        regime (Regime): INT8 or FP64 modulus table
        backend (BackendKind): defaults to Int8Sim for INT8 and Fp64Exact for FP64
        bound_method (BoundMethod): Naive, CauchySchwarz (os2-fast) or MagnitudeProduct (os2-accu)
        output_words (int): 1 for binary64 output, v for a v-word result
        q_max (int): FP64 table parameter, defaults to the inner dimension
        tighten (bool): spend bound slack on extra budget bits
    """
    logger = ozmm.logging.setup(logger=logger)
    A, B = normalize.normalize_matrix(A), normalize.normalize_matrix(B)
    if A.cols != B.rows:
        raise ShapeMismatchError(f"Cannot multiply {A.shape} by {B.shape}.")
    if output_words < 1:
        raise ShapeMismatchError(f"Output word count must be at least 1, got {output_words}.")
    regime = utils.get_enum_value(Regime, regime)
    backend = utils.get_enum_value(BackendKind, backend or DEFAULT_BACKEND[regime])
    bound_method = utils.get_enum_value(BoundMethod, bound_method)
    counter = counter if counter is not None else GemmCounter()
    q = A.cols
    # an empty inner dimension plans as q = 1; every product is zero
    q_plan = max(q, 1)

    with logger.context(
        bind={"s": s, "regime": regime.value, "backend": backend.value}
    ):
        table = _table_for(regime, s, q_max or q_plan)
        for m in table.moduli:
            check_backend(backend, m, q_plan)
        k_a, k_b = plan_budgets(table.M, q_plan, budget_mode, fraction)
        logger.debug("Budgets planned.", k_a=k_a, k_b=k_b, log2_M=table.log2_M())

        a_prime, row_exps = scale_and_truncate(A, Side.LEFT, k_a, rounding)
        b_prime, col_exps = scale_and_truncate(B, Side.RIGHT, k_b, rounding)
        split = SplitPlan(k_a, k_b, row_exps, col_exps, s, table, q).check()
        pair = ScaledIntPair(a_prime, b_prime, split)

        bound = estimate_bound(
            a_prime, b_prime, bound_method, k_a, k_b, table, backend, counter
        )
        if tighten and bound_method is not BoundMethod.NAIVE:
            pair, bound = tighten_budgets(A, B, pair, bound, rounding)
            logger.debug(
                "Budgets tightened.",
                extra_a=pair.plan.extra_a,
                extra_b=pair.plan.extra_b,
            )
    return Ozaki2Plan(pair, bound, backend, output_words, counter, logger)


def execute_plan(plan: Ozaki2Plan) -> Union[MatrixF64, MultiWordMatrix]:
    """Parts 2-4: residue GEMMs, CRT accumulation, inverse scaling.

    Raises:
        AmbiguityError: if the plan's bound does not certify 2 * c_max < M
    """
    logger = ozmm.logging.setup(logger=plan.logger)
    table = plan.table
    if not check_uniqueness(plan.bound, table.M):
        raise AmbiguityError(
            f"2 * c_max = {2 * plan.bound.c_max} is not below M = {table.M}; the product has several candidates."
        )
    a_prime, b_prime = plan.pair.a_prime, plan.pair.b_prime
    with logger.context(action="ozaki2", bind={"s": table.s}):
        acc = ResidueAccumulator(table, (a_prime.rows, b_prime.cols))
        for product in iter_residue_products(
            a_prime, b_prime, table, plan.backend, plan.counter
        ):
            acc.add(product)
            logger.debug("Residue product accumulated.", t=product.modulus_index)
        x = ReconstructedMatrix(
            acc.result(),
            plan.split.row_exponents,
            plan.split.col_exponents,
            certified_unique=True,
            bound=plan.bound,
        )
    if plan.output_words == 1:
        return inverse_scale_to_f64(x)
    return inverse_scale_to_multiword(x, plan.output_words)


def ozaki2_matmul(A, B, s: int, **kwargs) -> Union[MatrixF64, MultiWordMatrix]:
    """Emulated high-precision A @ B with exactly s residue GEMMs.

    Keyword arguments are those of plan_ozaki2.
    """
    return execute_plan(plan_ozaki2(A, B, s, **kwargs))


def ozaki2_matmul3(
    A,
    B,
    C,
    s: int,
    regime=Regime.FP64,
    backend=None,
    output_words: int = 1,
    q_max: int = None,
    counter: GemmCounter = None,
    logger=None,
) -> Union[MatrixF64, MultiWordMatrix]:
    """A @ B @ C through one CRT reconstruction.

    A is scaled by rows, C by columns and B by a single power of two.
    """
    logger = ozmm.logging.setup(logger=logger)
    A, B, C = (normalize.normalize_matrix(X) for X in (A, B, C))
    if A.cols != B.rows or B.cols != C.rows:
        raise ShapeMismatchError(f"Cannot multiply {A.shape}, {B.shape}, {C.shape}.")
    regime = utils.get_enum_value(Regime, regime)
    backend = utils.get_enum_value(BackendKind, backend or DEFAULT_BACKEND[regime])
    counter = counter if counter is not None else GemmCounter()
    q, r = A.cols, B.cols
    q_plan, r_plan = max(q, 1), max(r, 1)
    table = _table_for(regime, s, q_max or max(q_plan, r_plan))
    for m in table.moduli:
        check_backend(backend, m, max(q_plan, r_plan))
    k_a, k_b, k_c = plan_budgets_three(table.M, q_plan, r_plan)

    a_prime, row_exps = scale_and_truncate(A, Side.LEFT, k_a)
    b_prime, shift = scale_and_truncate(B, Side.WHOLE, k_b)
    c_prime, col_exps = scale_and_truncate(C, Side.RIGHT, k_c)
    bound = BoundEstimate((q * r) << (k_a + k_b + k_c), BoundMethod.NAIVE)
    if not check_uniqueness(bound, table.M):
        raise AmbiguityError("Three-matrix budgets do not certify a unique result.")

    with logger.context(action="ozaki2_matmul3", bind={"s": s, "k": k_a}):
        acc = ResidueAccumulator(table, (a_prime.rows, c_prime.cols))
        for t, m in enumerate(table.moduli):
            product = multiply_three_residues(
                residue_matrix(a_prime, m, backend),
                residue_matrix(b_prime, m, backend),
                residue_matrix(c_prime, m, backend),
                m,
                backend,
                counter=counter,
            )
            acc.add(ResidueProduct(t, product))
        x = ReconstructedMatrix(acc.result(), row_exps, col_exps, True, bound, shift)
    if output_words == 1:
        return inverse_scale_to_f64(x)
    return inverse_scale_to_multiword(x, output_words)
