import functools

import pytest

from freeubm.mcsim import SimConfig, estimate_haar_word_moments, estimate_word_moments

MC_WORDS = ("A", "AA", "AAA", "AAAA", "AA*")
HAAR_WORDS = ("AA*", "AA*AA*", "AA*AA*AA*")


@functools.lru_cache(maxsize=None)
def bm_run_256():
    """One shared N=256 run at t=1, alpha=1/2: 200 samples, 10 steps."""
    cfg = SimConfig(dim=256, t=1.0, steps=10, samples=200, seed=20240611, alpha=0.5)
    return cfg, dict(zip(MC_WORDS, estimate_word_moments(cfg, MC_WORDS)))


@functools.lru_cache(maxsize=None)
def haar_run_256(alpha):
    cfg = SimConfig(dim=256, t=0.0, samples=200, seed=77, alpha=alpha)
    return cfg, dict(zip(HAAR_WORDS, estimate_haar_word_moments(cfg, HAAR_WORDS)))


@pytest.fixture(scope="session")
def bm256():
    return bm_run_256()


@pytest.fixture(scope="session")
def haar256():
    return haar_run_256


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Record one pass/fail line per acceptance criterion and print it."""

    def record(number: int, checks: dict[str, bool], detail: str = ""):
        ok = all(checks.values())
        failed = [name for name, passed in checks.items() if not passed]
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += f"  failed: {', '.join(failed)}"
        if detail:
            line += f"  [{detail}]"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
