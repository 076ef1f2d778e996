import io

import pytest

from ozmm import exceptions, utils
from ozmm.crt import Regime
from ozmm.generate import GeneratorKind, GeneratorSpec
from ozmm.residue import BackendKind
from ozmm.scheme_one import SliceMode
from ozmm.sweep import (
    FIELDS,
    STATUS_OK,
    Method,
    SweepConfig,
    kplot,
    load_config,
    run_sweep,
    write_csv,
    write_kplot,
)

SMALL = SweepConfig(
    methods=(Method.OS2_FAST, Method.OS2_ACCU),
    s_range=(2, 4),
    n_list=(6,),
    generator=GeneratorSpec(GeneratorKind.RANDN, 3, 0, 0),
    timing=False,
)


def _csv(rows):
    out = io.StringIO()
    write_csv(rows, out)
    return out.getvalue()


class TestLoadConfig:
    def test_from_file(self, sweep_config_file):
        config = load_config(sweep_config_file)
        assert config.methods == (Method.OS1, Method.OS2_FAST, Method.DGEMM)
        assert config.s_range == (2, 3)
        assert config.k_range == (2, 3)
        assert config.n_list == (8,)
        assert config.regime is Regime.FP64
        assert config.generator.kind is GeneratorKind.PHI_LOGNORMAL
        assert config.generator.seed == 7
        assert config.phi == 0.5
        assert config.timing is False

    def test_overrides_win(self, sweep_config_file):
        config = load_config(sweep_config_file, {"N_LIST": "4,8", "TIMING": True, "S_RANGE": None})
        assert config.n_list == (4, 8)
        assert config.timing is True
        assert config.s_range == (2, 3)

    def test_environment_does_not_shadow_file_or_overrides(self, sweep_config_file):
        with utils.set_env({"SEED": "99", "N_LIST": "512", "TIMING": "True"}):
            config = load_config(sweep_config_file, {"SEED": 3})
        assert config.generator.seed == 3
        assert config.n_list == (8,)
        assert config.timing is False

    def test_defaults(self):
        config = load_config()
        assert config.methods == (Method.OS2_FAST, Method.OS2_ACCU)
        assert config.s_range == tuple(range(2, 21))
        assert config.k_range == tuple(range(2, 11))
        assert config.n_list == (256,)
        assert config.backend is None
        assert config.slice_mode is SliceMode.TRUNCATED
        assert config.generator.int_range == (-8, 8)

    def test_workers_from_environment(self, set_environment):
        assert load_config().workers == 2

    def test_backend_and_generator(self):
        config = load_config(
            overrides={"REGIME": "int8", "BACKEND": "bigint", "GENERATOR": "integer", "INT_RANGE": "-2,2"}
        )
        assert config.regime is Regime.INT8
        assert config.backend is BackendKind.BIGINT
        assert config.phi is None
        assert config.generator.int_range == (-2, 2)

    @pytest.mark.parametrize(
        "fixture_name,fixture",
        [
            ("regime", {"REGIME": "fp16"}),
            ("method", {"METHODS": "os3"}),
            ("seed", {"SEED": "forty-two"}),
            ("range", {"S_RANGE": "a..b"}),
            ("timing", {"TIMING": "sometimes"}),
        ],
    )
    def test_invalid(self, fixture_name, fixture):
        with pytest.raises(exceptions.InvalidConfigurationError):
            load_config(overrides=fixture)

    def test_missing_file(self, tmp_path):
        with pytest.raises(exceptions.InvalidConfigurationError):
            load_config(str(tmp_path / "missing.env"))


class TestRunSweep:
    def test_rows(self, sweep_config_file):
        rows = run_sweep(load_config(sweep_config_file))
        assert [(r.method, r.s) for r in rows] == [
            ("os1", 2),
            ("os1", 3),
            ("os2-fast", 2),
            ("os2-fast", 3),
            ("dgemm", None),
        ]
        assert [r.muls for r in rows] == [3, 6, 2, 3, 1]
        assert [r.backend for r in rows] == ["fp64", "fp64", "fp64exact", "fp64exact", "fp64"]
        assert all(r.status == STATUS_OK for r in rows)
        assert all(r.wall_ms is None for r in rows)
        assert all(r.n == 8 and r.phi == 0.5 for r in rows)

    def test_error_falls_with_s(self):
        rows = run_sweep(SMALL)
        fast = [r.max_rel_err for r in rows if r.method == "os2-fast"]
        accu = [r.max_rel_err for r in rows if r.method == "os2-accu"]
        assert fast[0] > fast[1]
        assert accu[0] > accu[1]

    def test_byte_identical_without_timing(self, sweep_config_file):
        config = load_config(sweep_config_file)
        assert _csv(run_sweep(config)) == _csv(run_sweep(config))

    def test_workers_do_not_change_rows(self):
        assert run_sweep(SMALL._replace(workers=3)) == run_sweep(SMALL)

    def test_timing(self):
        rows = run_sweep(SMALL._replace(timing=True, s_range=(2,)))
        assert all(r.wall_ms >= 0.0 for r in rows)

    def test_empty_n_list(self, sweep_config_file):
        rows = run_sweep(load_config(sweep_config_file, {"N_LIST": ""}))
        assert rows == []
        assert _csv(rows) == ",".join(FIELDS) + "\n"

    def test_point_failure_is_recorded(self):
        seen = []
        rows = run_sweep(SMALL._replace(methods=(Method.OS2_FAST,), s_range=(0, 2)), exception_handler=seen.append)
        assert rows[0].status.startswith("ModulusError")
        assert rows[0].max_rel_err is None
        assert rows[1].status == STATUS_OK
        assert len(seen) == 1
        assert isinstance(seen[0], exceptions.ModulusError)

    def test_catastrophic_failure_raises_after_sweep(self):
        seen = []
        config = SMALL._replace(methods=(Method.OS1, Method.DGEMM), k_range=(2,), slice_mode="bogus")
        with pytest.raises(exceptions.FailCatastrophically):
            run_sweep(config, exception_handler=seen.append)
        assert len(seen) == 1
        assert isinstance(seen[0], exceptions.InvalidConfigurationError)


class TestKplot:
    @pytest.mark.parametrize(
        "fixture_name,fixture",
        [
            ("int8_1024", {"regime": "int8", "q": 1024, "s": [2, 15, 16], "k": [2, 53, 57]}),
            ("fp64_1024", {"regime": "fp64", "q": 1024, "s": [16, 20, 21], "k": [170, 214, 225]}),
            ("fp64_4096", {"regime": Regime.FP64, "q": 4096, "s": [16, 20, 21, 25], "k": [161, 203, 213, 255]}),
        ],
    )
    def test_values(self, fixture_name, fixture):
        rows = kplot(fixture["regime"], [fixture["q"]], fixture["s"])
        assert [r.k for r in rows] == fixture["k"]
        assert [r.s for r in rows] == fixture["s"]
        assert all(r.q == fixture["q"] for r in rows)

    def test_range_string_and_csv(self):
        out = io.StringIO()
        write_kplot(kplot("int8", [1024], "2..3"), out)
        lines = out.getvalue().splitlines()
        assert lines[0] == "q,s,k"
        assert len(lines) == 3

    def test_low_values_reported(self):
        (row,) = kplot("int8", [4096], [1])
        assert row.k < 1
