import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

from revgeom.profiles import (load_surface, make_exotic_profile, make_sphere_profile,  # noqa: E402
                              rescale_model)


@pytest.fixture(scope="session")
def sphere():
    return make_sphere_profile(1.0)


@pytest.fixture(scope="session")
def ellipsoid():
    return load_surface("ellipsoid:1,2")


@pytest.fixture(scope="session")
def ellipsoid_pi(ellipsoid):
    return rescale_model(ellipsoid)


@pytest.fixture(scope="session")
def exotic():
    return make_exotic_profile()


@pytest.fixture(scope="session")
def exotic_pi(exotic):
    return rescale_model(exotic)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
