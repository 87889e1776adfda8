import numpy as np
import pytest

from blindrx.waveform import ModClass, PulseShape


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tx_pulse():
    return PulseShape()


@pytest.fixture(scope="session")
def rx_pulse():
    return PulseShape.receive()


DIGITAL = [ModClass.PSK2, ModClass.PSK4, ModClass.PSK8, ModClass.QAM16]


@pytest.fixture(scope="session")
def table_sweep():
    """Full-scale confusion matrices at 5 and 10 dB (2000 trials/class, 1000 symbols)."""
    from blindrx.harness import TrialConfig, sweep
    return dict(sweep(TrialConfig(n_symbols=1000, n_trials=2000, seed=2024), [5.0, 10.0],
                      workers=None))


_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion; shown in the terminal summary."""
    def _report(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
