import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("lrterrain", max_examples=60, deadline=None)
settings.load_profile("lrterrain")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
