import pytest
from decouple import UndefinedValueError

from ozmm import exceptions
from ozmm.contrib import sentry
from ozmm.sweep import Method, SweepConfig, run_sweep


def test_init(set_environment):
    sentry.init(context={"command": "sweep"})


def test_capture_exception(set_environment):
    try:
        raise exceptions.ModulusError("Test event. Please ignore.")
    except exceptions.ModulusError as e:
        sentry.capture(e, {"method": "os2-fast", "s": 0})


def test_capture_without_dsn_is_noop():
    sentry.capture(Exception("Not sent."))


def test_sweep_handler(set_environment):
    sentry.init()
    rows = run_sweep(
        SweepConfig(methods=(Method.OS2_FAST,), s_range=(0,), n_list=(4,), timing=False),
        exception_handler=sentry.capture,
    )
    assert rows[0].status.startswith("ModulusError")


def test_init_requires_dsn():
    with pytest.raises(UndefinedValueError):
        sentry.init()
