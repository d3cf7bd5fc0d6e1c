import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from corrdyn.corr import make_context

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
# parameters in the disk |a - 4| <= 3
disk_params = st.builds(
    lambda r, t: 4 + 3 * np.sqrt(r) * np.exp(2j * np.pi * t),
    st.floats(0, 1), st.floats(0, 1),
).filter(lambda a: abs(a - 1) > 1e-3)


@pytest.fixture(scope="session")
def ctx4():
    return make_context(4)


@pytest.fixture(scope="session")
def ctx7():
    return make_context(7)


@pytest.fixture(scope="session")
def ctx5():
    return make_context(5)


@pytest.fixture(scope="session")
def thresholds():
    """Calibration gates and measured values from scripts/calibrate_thresholds.py."""
    import json
    from pathlib import Path
    return json.loads((Path(__file__).parent / "fixtures" / "thresholds.json").read_text())


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
