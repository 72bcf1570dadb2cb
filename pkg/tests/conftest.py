import numpy as np
import pytest
from hypothesis import settings, strategies as st

from kbratteli import instances
from kbratteli.kgraph import perron_data, validate_kgraph

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append((criterion, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def l2():
    g = instances.lambda2()
    return g, perron_data(g)


@pytest.fixture(scope="session")
def exb():
    g = instances.ex_b()
    return g, perron_data(g)


@pytest.fixture(scope="session")
def periodic():
    g = instances.load(instances.EX_PERIODIC)
    return g, perron_data(g)


@pytest.fixture(scope="session")
def thin():
    g = instances.load(instances.EX_THIN)
    return g, perron_data(g)


@pytest.fixture(scope="session", params=["l2", "exb"])
def bundled(request):
    return request.getfixturevalue(request.param)


@st.composite
def commuting_kgraphs(draw, max_vertices: int = 3):
    """Rank-2 graphs ``(B, p(B))``: polynomials in one matrix always commute.

    ``B`` is entrywise positive with row sums at least 2, so every instance
    is strongly connected, primitive and satisfies the two-edge condition.
    """
    n = draw(st.integers(1, max_vertices))
    entries = draw(st.lists(st.integers(1, 2), min_size=n * n, max_size=n * n))
    B = np.array(entries, dtype=np.int64).reshape(n, n)
    if B.sum(axis=1).min() < 2:
        B = B + np.eye(n, dtype=np.int64)
    kind = draw(st.sampled_from(["same", "shift", "scalar"]))
    if kind == "same":
        A2 = B
    elif kind == "shift":
        A2 = B + np.eye(n, dtype=np.int64)
    else:
        A2 = 2 * np.eye(n, dtype=np.int64)
    return validate_kgraph(2, n, [B.tolist(), A2.tolist()])
