import csv
import time
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from types import FunctionType
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, TextIO, Tuple

import numpy as np
from decouple import Config, Csv, RepositoryEnv, Undefined, UndefinedValueError, config, undefined

import ozmm.exceptions
import ozmm.logging
from ozmm import normalize, utils
from ozmm.crt import Regime, build_crt_table, build_modulus_set
from ozmm.generate import GeneratorKind, GeneratorSpec, generate
from ozmm.numeric import MatrixF64, MultiWordMatrix
from ozmm.oracle import ExactMatrix, compare, exact_matmul
from ozmm.pipeline import DEFAULT_BACKEND, ozaki2_matmul
from ozmm.residue import BackendKind, GemmCounter
from ozmm.scheme_one import SchemeOneConfig, SliceMode, ozaki1_matmul
from ozmm.split import BoundMethod


class Method(Enum):
    OS1 = "os1"
    OS2_FAST = "os2-fast"
    OS2_ACCU = "os2-accu"
    DGEMM = "dgemm"


METHOD_BOUNDS = {
    Method.OS2_FAST: BoundMethod.CAUCHY_SCHWARZ,
    Method.OS2_ACCU: BoundMethod.MAGNITUDE_PRODUCT,
}

FIELDS = [
    "method",
    "n",
    "phi",
    "s",
    "muls",
    "max_rel_err",
    "max_abs_err",
    "wall_ms",
    "backend",
    "status",
]
KPLOT_FIELDS = ["q", "s", "k"]
STATUS_OK = "ok"


class SweepConfig(NamedTuple):
    """One sweep: every method at every n, over the s range (OS2) or k range (OS1).

    Args:
        methods (tuple): Method members, in output order
        s_range (list): moduli counts for os2-fast / os2-accu
        k_range (list): slice counts for os1
        n_list (list): square matrix sizes
        regime (Regime):
        backend (BackendKind): None picks the regime default
        output_words (int): 1 for binary64 output, v for v-word output
        generator (GeneratorSpec): template; rows and cols come from n, B uses seed + 1
        timing (bool): write wall_ms; off gives byte-identical CSV across runs
        workers (int): thread pool size
        slice_mode (SliceMode): os1 reduction variant
    """

    methods: Tuple[Method, ...] = (Method.OS2_FAST, Method.OS2_ACCU)
    s_range: Tuple[int, ...] = tuple(range(2, 21))
    k_range: Tuple[int, ...] = tuple(range(2, 11))
    n_list: Tuple[int, ...] = (256,)
    regime: Regime = Regime.FP64
    backend: Optional[BackendKind] = None
    output_words: int = 1
    generator: GeneratorSpec = GeneratorSpec(GeneratorKind.PHI_LOGNORMAL, 42, 0, 0)
    timing: bool = True
    workers: int = 1
    slice_mode: SliceMode = SliceMode.TRUNCATED

    def params(self, method: Method) -> List[Optional[int]]:
        if method is Method.OS1:
            return list(self.k_range)
        if method is Method.DGEMM:
            return [None]
        return list(self.s_range)

    @property
    def phi(self) -> Optional[float]:
        if self.generator.kind is GeneratorKind.PHI_LOGNORMAL:
            return self.generator.phi
        return None


class SweepRow(NamedTuple):
    method: str
    n: int
    phi: Optional[float]
    s: Optional[int]
    muls: Optional[int]
    max_rel_err: Optional[float]
    max_abs_err: Optional[float]
    wall_ms: Optional[float]
    backend: str
    status: str = STATUS_OK


class KRow(NamedTuple):
    q: int
    s: int
    k: int


class _Inputs(NamedTuple):
    A: Any
    B: Any
    exact: ExactMatrix


# CONFIGURATION


class _SweepSource(Config):
    """Config over the merged file and override values only; os.environ is not consulted."""

    def get(self, option, default=undefined, cast=undefined):
        if option in self.repository:
            value = self.repository[option]
        elif isinstance(default, Undefined):
            raise UndefinedValueError(f"{option} not found in the sweep configuration.")
        else:
            value = default
        if cast is bool:
            return self._cast_boolean(value)
        if isinstance(cast, Undefined):
            return value
        return cast(value)


def load_config(path: str = None, overrides: Dict[str, Any] = None) -> SweepConfig:
    """Build a SweepConfig from a flat KEY=VALUE file, with `overrides` taking precedence.

    Keys: METHODS, S_RANGE, K_RANGE, N_LIST, REGIME, BACKEND, OUTPUT_WORDS,
    GENERATOR, PHI, CONSTANT, INT_RANGE, INPUT_WORDS, SEED, TIMING, SLICE_MODE.
    The pool size comes from OZMM_WORKERS.
    """
    values = {}
    if path:
        try:
            values.update(RepositoryEnv(path).data)
        except OSError as e:
            raise ozmm.exceptions.InvalidConfigurationError(
                f"Unable to read sweep config {path}."
            ) from e
    values.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    source = _SweepSource(values)

    try:
        generator = GeneratorSpec(
            kind=normalize.normalize_enum(
                GeneratorKind, source("GENERATOR", default="phi")
            ),
            seed=source("SEED", default="42", cast=int),
            rows=0,
            cols=0,
            phi=source("PHI", default="0.5", cast=float),
            constant=source("CONSTANT", default="1.0", cast=float),
            int_range=tuple(source("INT_RANGE", default="-8,8", cast=Csv(int))),
            words=source("INPUT_WORDS", default="1", cast=int),
        )
        backend = source("BACKEND", default="")
        return SweepConfig(
            methods=tuple(
                normalize.normalize_enum(Method, m)
                for m in source("METHODS", default="os2-fast,os2-accu", cast=Csv())
            ),
            s_range=tuple(normalize.normalize_range(source("S_RANGE", default="2..20"))),
            k_range=tuple(normalize.normalize_range(source("K_RANGE", default="2..10"))),
            n_list=tuple(source("N_LIST", default="256", cast=Csv(int))),
            regime=normalize.normalize_enum(Regime, source("REGIME", default="fp64")),
            backend=normalize.normalize_enum(BackendKind, backend) if backend else None,
            output_words=source("OUTPUT_WORDS", default="1", cast=int),
            generator=generator,
            timing=source("TIMING", default="True", cast=bool),
            workers=config("OZMM_WORKERS", default="1", cast=int),
            slice_mode=normalize.normalize_enum(
                SliceMode, source("SLICE_MODE", default="truncated")
            ),
        )
    except ValueError as e:
        raise ozmm.exceptions.InvalidConfigurationError(
            f"Invalid sweep configuration: {e}"
        ) from e


# EXECUTION


def _inputs(config: SweepConfig, n: int) -> _Inputs:
    spec = config.generator._replace(rows=n, cols=n)
    A = generate(spec)
    B = generate(spec._replace(seed=spec.seed + 1))
    return _Inputs(A, B, exact_matmul(A, B))


def _as_f64(X) -> MatrixF64:
    return X.total() if isinstance(X, MultiWordMatrix) else X


def _multiply(config: SweepConfig, method: Method, param, inputs: _Inputs, logger):
    counter = GemmCounter()
    if method is Method.DGEMM:
        C = MatrixF64(np.matmul(_as_f64(inputs.A).data, _as_f64(inputs.B).data))
        counter.count(GemmCounter.DGEMM)
        return C, counter[GemmCounter.DGEMM], "fp64"
    if method is Method.OS1:
        C = ozaki1_matmul(
            inputs.A,
            inputs.B,
            SchemeOneConfig(param),
            config.slice_mode,
            words=config.output_words,
            counter=counter,
            logger=logger,
        )
        return C, counter[GemmCounter.SLICE], "fp64"
    backend = config.backend or DEFAULT_BACKEND[config.regime]
    C = ozaki2_matmul(
        inputs.A,
        inputs.B,
        param,
        regime=config.regime,
        backend=backend,
        bound_method=METHOD_BOUNDS[method],
        output_words=config.output_words,
        counter=counter,
        logger=logger,
    )
    return C, counter[GemmCounter.RESIDUE], backend.value


def _run_point(config: SweepConfig, method: Method, n: int, param, inputs: _Inputs, logger, exception_handler):
    """Returns (row, catastrophic exception or None)."""
    backend = "fp64" if method in (Method.OS1, Method.DGEMM) else (
        config.backend or DEFAULT_BACKEND[config.regime]
    ).value
    failed = SweepRow(method.value, n, config.phi, param, None, None, None, None, backend)
    start = time.perf_counter()
    try:
        C, muls, backend = _multiply(config, method, param, inputs, logger)
        elapsed = (time.perf_counter() - start) * 1000.0
        report = compare(C, inputs.exact)
        row = SweepRow(
            method.value,
            n,
            config.phi,
            param,
            muls,
            report.max_rel_err,
            report.max_abs_err,
            elapsed if config.timing else None,
            backend,
        )
        return row, None
    except ozmm.exceptions.FailButContinue as e:
        _log_exception(logger, exception_handler, e)
        return failed._replace(status=utils.exception_to_str(e)), None
    except ozmm.exceptions.FailCatastrophically as e:
        _log_exception(logger, exception_handler, e)
        return failed._replace(status=utils.exception_to_str(e)), e


def _log_exception(logger, exception_handler: FunctionType, e: BaseException):
    logger.error(utils.exception_to_str(e))
    if exception_handler:
        exception_handler(e)


def run_sweep(
    config: SweepConfig, logger=None, exception_handler: FunctionType = None
) -> List[SweepRow]:
    """Run every (n, method, parameter) point and return rows in that order.

    Points run in a pool of `config.workers` threads. A point that raises
    FailButContinue is kept as a row whose status holds the error; a
    FailCatastrophically is recorded the same way and re-raised once every
    point has run.

    Args:
        config (SweepConfig):
        logger:
        exception_handler (FunctionType): called with every point failure (e.g. contrib.sentry.capture)
    """
    logger = ozmm.logging.setup(logger=logger)
    point_logger = logger if config.workers <= 1 else None
    rows, exceptions = [], []

    with logger.context(action="sweep", bind={"regime": config.regime.value}):
        for n in config.n_list:
            inputs = _inputs(config, n)
            points = [(m, p) for m in config.methods for p in config.params(m)]
            logger.info("Sweep inputs ready.", n=n, points=len(points))

            def run(point):
                return _run_point(
                    config, point[0], n, point[1], inputs,
                    point_logger or ozmm.logging.setup(), exception_handler,
                )

            with ThreadPoolExecutor(max_workers=max(1, config.workers)) as pool:
                for row, e in pool.map(run, points):
                    rows.append(row)
                    if e is not None:
                        exceptions.append(e)

    if exceptions:
        raise ozmm.exceptions.FailCatastrophically(
            f"Encountered catastrophic exceptions at {len(exceptions)} sweep points."
        ) from exceptions[0]
    return rows


# OUTPUT


def write_rows(rows: Iterable[NamedTuple], stream: TextIO, fields: List[str]):
    writer = csv.DictWriter(stream, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row._asdict())


def write_csv(rows: Iterable[SweepRow], stream: TextIO):
    write_rows(rows, stream, FIELDS)


def kplot(regime, q_list: Iterable[int], s_range) -> List[KRow]:
    """k = floor(floor(log2((M/2 - 1) / q)) / 2) for every (q, s), from the regime's table.

    Values are reported as computed, including those below 1.
    """
    regime = utils.get_enum_value(Regime, regime)
    rows = []
    for q in q_list:
        for s in normalize.normalize_range(s_range):
            table = build_crt_table(build_modulus_set(regime, s, q))
            k = utils.floor_log2_ratio(table.M - 2, 2 * q) // 2
            rows.append(KRow(int(q), s, k))
    return rows


def write_kplot(rows: Iterable[KRow], stream: TextIO):
    write_rows(rows, stream, KPLOT_FIELDS)
