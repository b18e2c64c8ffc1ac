import numpy as np
import pytest

from qcjacobi.algebra import standard_structure
from qcjacobi.model import make_model, random_model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[2, 3], ids=["n2", "n3"])
def structure(request):
    return standard_structure(request.param)


@pytest.fixture
def flat2():
    return make_model("flat", n=2)


@pytest.fixture
def sas2():
    return make_model("sasakian", n=2)


@pytest.fixture
def custom2():
    return random_model(standard_structure(2), np.random.default_rng(7))


# --- acceptance summary -------------------------------------------------------

def pytest_configure(config):
    config.acceptance_lines = {}


@pytest.fixture
def acceptance(request):
    """record(k, passed, detail): one summary line per acceptance criterion."""
    lines = request.config.acceptance_lines

    def record(k, passed, detail):
        line = f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[k] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
