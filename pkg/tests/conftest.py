import pytest

from towerlab.construction import TowerBuild
from towerlab.schedule import default_schedule


@pytest.fixture(scope="session")
def house_build():
    """Default four-stage schedule, first three stages built."""
    return TowerBuild(default_schedule(4)).build(3)
