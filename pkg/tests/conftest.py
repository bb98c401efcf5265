import pytest

from hhmeasure.potential import get_kernel

# One shared kernel per session: every frozen reference value in the suite
# was produced at this radius.
SESSION_RADIUS = 1664


@pytest.fixture(scope="session")
def kernel():
    return get_kernel(SESSION_RADIUS)
