import os

import pytest
from hypothesis import settings

from riphard import kernels

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BACKENDS = [pytest.param(kernels.PYTHON, id="python")]
if kernels.COMPILED is not None:
    BACKENDS.append(pytest.param(kernels.COMPILED, id="compiled"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
