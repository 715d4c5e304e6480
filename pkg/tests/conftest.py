import sys

import numpy as np
import pytest

from affpr.construct import build_real_minimal, sample_generic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def real_minimal_2d():
    return build_real_minimal(2, [(1, 0), (2, 3)])


def random_signal(rng, d, complex_field):
    x = rng.standard_normal(d)
    if complex_field:
        x = x + 1j * rng.standard_normal(d)
    return x


def generic(field, m, d, seed):
    return sample_generic(field, m, d, seed)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance lines after the run, outside output capture."""
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and getattr(mod, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for k in sorted(mod.RESULTS):
                terminalreporter.write_line(mod.RESULTS[k])
