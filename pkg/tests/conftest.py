import importlib

import numpy as np
import pytest

from reliab import _pykernels


def _backends():
    out = [pytest.param(_pykernels, id="python")]
    try:
        out.append(pytest.param(importlib.import_module("reliab._ckernels"), id="cython"))
    except ImportError:
        out.append(pytest.param(None, id="cython", marks=pytest.mark.skip("extension not built")))
    return out


@pytest.fixture(params=_backends())
def kernel_impl(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
