import numpy as np
import pytest

from rbcx import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture(params=kernels.available_backends())
def backend(request, monkeypatch):
    """Run a test once per kernel backend by patching the module-level kernels."""
    mod = kernels.get_backend(request.param)
    for name in ("radon_splat", "hamming_scan", "l1_scan", "shifted_l1", "lbp_codes"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return mod


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
