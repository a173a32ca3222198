import numpy as np
import pytest

# First four raw 64-bit outputs of rng_substream(42, 0), generated once and frozen.
SUBSTREAM_42_0 = [
    15129985323320379406,
    3490965594592278910,
    16005516994917231875,
    7278743398533373529,
]

# |residual| * n / N^3 of the cosine-power kernel at N=2, n=1e4, t=1
COSINE_POWER_C = 0.11459039099824773
# max over corners of |h| * sqrt(n) / N^3 for the angle density at N=3, K=2, n=1e4
ANGLE_DENSITY_C = 0.3046469490436883

# Smallest N from which the sine slope check and the decay check hold up to 500.
SIN_BOUND_N0 = 4
DECAY_N1 = 4


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def substream_42_0():
    return SUBSTREAM_42_0


# One line per acceptance criterion, filled by test_acceptance and echoed at the end of the run.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
