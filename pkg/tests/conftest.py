import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the shared toyenv helper

from platoonrl.config import PlatoonConfig, RewardWeights, RunConfig


@pytest.fixture(scope="session")
def pconfig():
    return PlatoonConfig()


@pytest.fixture(scope="session")
def weights():
    return RewardWeights()


@pytest.fixture(scope="session")
def run_config():
    return RunConfig()
