import numpy as np
import pytest

from sigknn.sigdata import Label, Modality, Signature
from sigknn.synth import SynthParams, generate_dataset

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_signature(x, y, p, t=None, modality=Modality.STYLUS, **meta):
    x = np.asarray(x, dtype=float)
    if t is None:
        t = np.arange(len(x)) * 10
    meta.setdefault("signer_id", "s1")
    meta.setdefault("signature_id", "g1")
    meta.setdefault("label", Label.GENUINE)
    return Signature(t=t, x=x, y=y, p=p, modality=modality, **meta)


@pytest.fixture
def sig_factory():
    return make_signature


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """2 writers x (5 genuine + 5 forged)."""
    out = tmp_path_factory.mktemp("small")
    params = SynthParams(seed=7, n_writers=2, genuine_per_writer=5, skilled_forgeries_per_writer=5)
    return generate_dataset(params, out), out


@pytest.fixture(scope="session")
def acceptance_datasets(tmp_path_factory):
    """Evaluation set (seed 42) and disjoint development set (seed 43), 20 writers each."""
    root = tmp_path_factory.mktemp("acceptance")
    ev = generate_dataset(SynthParams(seed=42, n_writers=20), root / "eval")
    dev = generate_dataset(SynthParams(seed=43, n_writers=20), root / "dev")
    return ev, dev, root
