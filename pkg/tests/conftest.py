import pytest

from crystalbec.kernels import build_demo_kernels


@pytest.fixture(scope="session")
def demo_kernels():
    return build_demo_kernels(0.5, 0.5)
