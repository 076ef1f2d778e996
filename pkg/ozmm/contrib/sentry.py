"""Optional error reporting for sweep point failures (``pip install ozmm[sentry]``)."""
from decouple import config

try:
    import sentry_sdk
except ImportError:
    raise Exception(
        "ozmm.contrib.sentry requires the sentry_sdk package, please install it to proceed"
    )


def _dsn():
    return config("SENTRY_DSN", default=None)


def init(dsn: str = None, context: dict = None):
    if not dsn:
        dsn = config("SENTRY_DSN")
    sentry_sdk.init(
        dsn=dsn,
        default_integrations=False,
        environment=config("OZMM_RUN_NAME", default="ozmm"),
    )
    for k, v in (context or {}).items():
        sentry_sdk.set_tag(k, v)


def capture(e, context: dict = None):
    """Report `e`, tagged with `context`; a no-op without SENTRY_DSN."""
    if not _dsn():
        return
    with sentry_sdk.new_scope() as scope:
        for k, v in (context or {}).items():
            scope.set_tag(k, v)
        sentry_sdk.capture_exception(e)
