import os

import pytest

from rmtorus import validate


@pytest.fixture(scope="session", autouse=True)
def _stable_precision_env():
    saved = os.environ.pop("RM_TORUS_PRECISION", None)
    yield
    if saved is not None:
        os.environ["RM_TORUS_PRECISION"] = saved


@pytest.fixture(scope="session")
def rm5():
    return validate((4, -1, 5, -1))


@pytest.fixture(scope="session")
def rm6():
    return validate((5, -1, 6, -1))
