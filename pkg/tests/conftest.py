import sys
import numpy as np
import pytest

from splinerad import _kernels
from splinerad.geometry import DescriptorBounds, DescriptorVector

BACKENDS = ["python"] + (["cython"] if _kernels.compiled_backend is not None else [])
KERNELS = ("de_casteljau", "polyline_self_intersects", "gauss_corr", "array_factor")


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = _kernels.python_backend if request.param == "python" else _kernels.compiled_backend
    for name in KERNELS:
        monkeypatch.setattr(_kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def ref():
    return DescriptorVector.reference()


@pytest.fixture
def box():
    return DescriptorBounds.around(rel=0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(mod.LINES):
        terminalreporter.write_line(mod.LINES[key])
