import pathlib

import pytest

from molgrow.chem import default_engine

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> pathlib.Path:
    return DATA


@pytest.fixture(scope="session")
def engine():
    return default_engine()
