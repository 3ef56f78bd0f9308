import numpy as np
import pytest

from kansa_sphere.kernels import helmholtz_operator, tps_kernel
from kansa_sphere.sphere_geom import PointSet, fibonacci_points


@pytest.fixture(scope="session")
def tps2():
    return tps_kernel(2, 2)


@pytest.fixture(scope="session")
def tps3():
    return tps_kernel(3, 2)


@pytest.fixture(scope="session")
def helm():
    return helmholtz_operator(1.0, 2)


@pytest.fixture(scope="session")
def fib():
    cache = {}

    def get(n, d=2):
        if (n, d) not in cache:
            cache[n, d] = fibonacci_points(n, d)
        return cache[n, d]
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_sphere(rng, n, d=2):
    p = rng.standard_normal((n, d + 1))
    return p / np.linalg.norm(p, axis=1, keepdims=True)


OCTAHEDRON = PointSet(np.vstack([np.eye(3), -np.eye(3)]))


ACCEPTANCE_RESULTS: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    if rep.failed or number not in ACCEPTANCE_RESULTS:
        ACCEPTANCE_RESULTS[number] = (title, "FAIL" if rep.failed else "PASS", detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, status, detail = ACCEPTANCE_RESULTS[number]
        line = f"[{status}] {number:2d}. {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
