import numpy as np
import pytest


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def record(request):
    """Log one pass/fail line per acceptance criterion, then assert it."""
    def _record(name, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        request.config._acceptance_lines.append(line)
        assert ok, line
    return _record

from nlodesign import bnn, msbnn
from nlodesign.data import SynthConfig, synth_dataset
from nlodesign.features import Tier
from nlodesign.vocab import load_default_vocabulary


@pytest.fixture(scope="session")
def vocab():
    return load_default_vocabulary()


@pytest.fixture(scope="session")
def small_dataset(vocab):
    """60 zero-noise records with 4 third-order columns."""
    return synth_dataset(SynthConfig(n_records=60, noise_sigma=0.0, f3_width=4),
                         vocab, seed=1)


@pytest.fixture(scope="session")
def lgc_model(small_dataset, vocab):
    cfg = bnn.TrainConfig(max_iterations=25, hidden_sizes=(6,), seed=0)
    return msbnn.train_msbnn(small_dataset, vocab, Tier.LGC, cfg)


@pytest.fixture(scope="session")
def clgc_model(small_dataset, vocab):
    cfg = bnn.TrainConfig(max_iterations=25, hidden_sizes=(6,), seed=0)
    return msbnn.train_msbnn(small_dataset, vocab, Tier.CLGC, cfg)


@pytest.fixture(scope="session")
def lgc_model_path(lgc_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("models") / "lgc.json"
    msbnn.save_msbnn(lgc_model, path)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(0)
