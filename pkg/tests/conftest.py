from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


@pytest.fixture(scope="session")
def mortality_fixture_path() -> Path:
    return DATA / "mortality_synthetic.csv"


@pytest.fixture(scope="session")
def cricket_fixture_path() -> Path:
    return DATA / "cricket_synthetic.csv"
