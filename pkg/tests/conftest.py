import pytest

from agelab import kernels


@pytest.fixture(params=kernels.available_backends())
def each_backend(request):
    """Run a test once per compiled/pure backend, restoring the default."""
    previous = kernels.backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)
