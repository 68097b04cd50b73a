from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from percepthash.imageio_prep import LumaImage, load

CORPUS_DIR = Path(__file__).parent / "data" / "corpus"


def corpus_paths() -> list[Path]:
    return sorted(CORPUS_DIR.glob("*.png"))


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture(scope="session")
def corpus() -> dict[str, LumaImage]:
    return {p.stem: load(p) for p in corpus_paths()}


@pytest.fixture(scope="session")
def lena(corpus) -> LumaImage:
    return corpus["lena"]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
