import pytest

from minwage import config as C
from minwage.equilibrium import SolverOptions


@pytest.fixture(scope="session")
def cfg():
    return C.load_config()


@pytest.fixture(scope="session")
def params(cfg):
    return C.model_params(cfg)


@pytest.fixture(scope="session")
def baseline_policy(cfg):
    return C.policy(cfg)


@pytest.fixture(scope="session")
def options():
    return SolverOptions()
