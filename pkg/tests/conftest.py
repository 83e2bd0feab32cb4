import numpy as np
import pytest
from hypothesis import strategies as st

from pdpk.config import GeneratorConfig
from pdpk.dataset import generate_dataset
from pdpk.pqspace import KINDS, DependencyFunction, Parameter, PQSpace, Quality, ValueRange


@pytest.fixture(scope="session")
def benchmark():
    return generate_dataset(GeneratorConfig())


def linear(a, b, src, tgt):
    return DependencyFunction("linear", (float(a), float(b)), ValueRange(*src), ValueRange(*tgt))


def make_space(p_domains, q_domains, deps, known=None):
    """Small hand-built space; ``deps`` maps (k, j) to a DependencyFunction."""
    params = tuple(Parameter(k, f"p_{k}", ValueRange(*d)) for k, d in enumerate(p_domains))
    quals = tuple(Quality(j, f"q_{j}", ValueRange(*d)) for j, d in enumerate(q_domains))
    return PQSpace(params, quals, dict(deps), frozenset(deps if known is None else known))


@st.composite
def ranges(draw, lo=-50.0, hi=50.0, min_width=0.5, max_width=200.0):
    a = draw(st.floats(lo, hi, allow_nan=False))
    w = draw(st.floats(min_width, max_width, allow_nan=False))
    return ValueRange(a, a + w)


@st.composite
def dependency_functions(draw, target=None):
    kind = draw(st.sampled_from(KINDS))
    src = draw(ranges())
    tgt = target if target is not None else draw(ranges(min_width=2.0, max_width=100.0))
    return DependencyFunction.from_endpoints(
        kind, src, tgt,
        increasing=draw(st.booleans()),
        offset=draw(st.floats(0.05, 1.0)),
        vertex_below=draw(st.booleans()),
    )


def rng(seed=0):
    return np.random.default_rng(seed)


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): check belonging to an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when == "teardown":
        return
    number, title = mark.args
    entry = _ACCEPTANCE.setdefault(number, {"title": title, "passed": 0, "total": 0, "seconds": 0.0})
    # fixture work (e.g. model training) is part of the criterion's runtime
    entry["seconds"] += rep.duration
    if rep.when == "setup" and rep.passed:
        return
    entry["total"] += 1
    entry["passed"] += int(rep.passed and rep.when == "call" and not hasattr(rep, "wasxfail"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[number]
        verdict = "PASS" if e["passed"] == e["total"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {verdict}  {e['title']}  ({e['passed']}/{e['total']} checks, {e['seconds']:.1f} s)")
