import functools

import pytest

from braidflow.braid_algebra import parse_word
from braidflow.generating_function import GeneratorShape
from braidflow.synthesis import build_schedule, make_layout


@functools.lru_cache(maxsize=None)
def schedule_for(word: str, n: int = 3, warp=None):
    from braidflow.synthesis import WarpSpec

    w = parse_word(word, n)
    return build_schedule(w, make_layout(n), 8, warp or WarpSpec())


@pytest.fixture(scope="session")
def layout3():
    return make_layout(3)


@pytest.fixture(scope="session")
def shape16(layout3):
    """Certified shape used by the default three-strand pipeline."""
    return GeneratorShape(16, layout3.eps, layout3.centers[0])


@pytest.fixture(scope="session")
def shape8(layout3):
    return GeneratorShape(8, layout3.eps, layout3.centers[0])


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
