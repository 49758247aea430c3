from __future__ import annotations

import random
from pathlib import Path

import pytest

from groovekit.grid import CELLS_PER_MEASURE, GrooveGrid, Measure

DATA_DIR = Path(__file__).parent / "data"
MINI_GROOVE = DATA_DIR / "mini_groove"

_BITS_TO_CELLS = str.maketrans("01", "-o")


def random_measure(rng: random.Random) -> Measure:
    bits = rng.getrandbits(CELLS_PER_MEASURE)
    return Measure(f"{bits:0{CELLS_PER_MEASURE}b}".translate(_BITS_TO_CELLS))


def random_grid(rng: random.Random, min_measures: int = 1, max_measures: int = 16) -> GrooveGrid:
    count = rng.randint(min_measures, max_measures)
    return GrooveGrid(measures=[random_measure(rng) for _ in range(count)])


@pytest.fixture(scope="session")
def mini_groove_root() -> Path:
    assert (MINI_GROOVE / "info.csv").is_file(), "run tests/make_mini_groove.py first"
    return MINI_GROOVE


@pytest.fixture(scope="session")
def mini_corpus(mini_groove_root):
    """The fixture dataset run through the full build pipeline once."""
    from groovekit.dataset import build_corpus, filter_corpus, load_metadata
    from groovekit.grid import default_drum_map

    records = filter_corpus(load_metadata(mini_groove_root / "info.csv"))
    grids, stats, rejections = build_corpus(records, mini_groove_root, default_drum_map())
    return grids, stats, rejections
