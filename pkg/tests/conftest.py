import numpy as np
import pytest

from graphlcp.pipeline import synthetic_bundle
from graphlcp.synth import SbmSpec

# acceptance results, filled by test_acceptance.py: {number: (passed, detail)}
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory):
    from graphlcp.io import save_bundle

    spec = SbmSpec(num_nodes=200, intra_prob=0.1, inter_prob=0.01, seed=1)
    graph, table = synthetic_bundle(spec)
    root = tmp_path_factory.mktemp("bundle")
    save_bundle(root, graph, table)
    return root


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
