import os
import pathlib

import pytest


@pytest.fixture(scope="session")
def root():
    return pathlib.Path(os.environ.get("DCDR_ROOT", pathlib.Path(__file__).resolve().parents[2]))


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("DCDR_CLI")
    if not path:
        pytest.skip("DCDR_CLI not set")
    return path
