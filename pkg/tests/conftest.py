import numpy as np
import pytest

from vaas.synthetic import SYNTHETIC_TOY_CONFIG, build_synthetic_dataset
from vaas.tensor_io import load_manifest

# verdict lines from the acceptance gate, echoed after the normal summary
_acceptance_verdicts = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _acceptance_verdicts


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_verdicts:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_verdicts:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synth_dataset(tmp_path_factory):
    """The seeded 20+20 synthetic dataset, built once per session."""
    root = tmp_path_factory.mktemp("synth")
    manifest_path = build_synthetic_dataset(root)
    return load_manifest(manifest_path)


@pytest.fixture(scope="session")
def synth_toy_cfg():
    return SYNTHETIC_TOY_CONFIG


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
