import os

import numpy as np
import pytest
from hypothesis import settings

from perpetua import _pykernels

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

try:
    from perpetua import _ckernels
except ImportError:  # compiled extension not built
    _ckernels = None

BACKENDS = [pytest.param(_pykernels, id="python")]
if _ckernels is not None:
    BACKENDS.append(pytest.param(_ckernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def kern(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
