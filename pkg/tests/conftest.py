import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "cmbounds", deadline=None, max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cmbounds")

DATA = Path(__file__).parent / "data"


def pytest_addoption(parser):
    parser.addoption("--long", action="store_true", default=False,
                     help="run large-scale computations")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long") or os.environ.get("CMBOUNDS_LONG"):
        return
    skip = pytest.mark.skip(reason="needs --long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    """Modular/Hilbert polynomial cache shared by the session.

    CMBOUNDS_CACHE_DIR points at a persistent cache; otherwise a fresh
    directory is used so the timings below include the computation.
    """
    env = os.environ.get("CMBOUNDS_CACHE_DIR")
    if env:
        Path(env).mkdir(parents=True, exist_ok=True)
        return env
    return str(tmp_path_factory.mktemp("cmbounds-cache"))


@pytest.fixture(scope="session")
def field13():
    from cmbounds.cmfield import CMQuartic
    return CMQuartic(13, -13, 3)


@pytest.fixture(scope="session")
def field133():
    from cmbounds.cmfield import CMQuartic
    return CMQuartic(133, -25, 2)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
