import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def nodal_impedance(omega, c_trap, l1, l2, r_loss, c_amp, c_tuning, r_state, c_ds):
    """Endcap impedance by nodal analysis: inject 1 A at T and solve Y v = i.

    Nodes: T (endcap), M (tap), S (between c_tuning and the HEMT). Written
    independently of the package's series/parallel reduction.
    """
    jw = 1j * omega
    y_t = jw * c_trap + 1 / r_loss
    y_l1 = 1 / (jw * l1)
    y_l2 = 1 / (jw * l2)
    y_ct = jw * c_tuning
    y_h = 1 / r_state + jw * c_ds
    y = np.array(
        [
            [y_t + y_l1, -y_l1, 0],
            [-y_l1, y_l1 + y_l2 + jw * c_amp + y_ct, -y_ct],
            [0, -y_ct, y_ct + y_h],
        ]
    )
    v = np.linalg.solve(y, np.array([1.0, 0.0, 0.0]))
    return v[0]


@pytest.fixture
def nodal():
    return nodal_impedance


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_LINES, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
