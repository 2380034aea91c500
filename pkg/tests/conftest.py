import pytest

from vertisched.fixtures import demo_instance, load_record
from vertisched.solver import solve


@pytest.fixture(scope="session")
def demo_inst():
    return demo_instance()


@pytest.fixture(scope="session")
def demo_record():
    return load_record()


@pytest.fixture(scope="session")
def demo_baseline(demo_inst):
    result = solve(demo_inst)
    assert result.status == "optimal"
    return result.schedule
