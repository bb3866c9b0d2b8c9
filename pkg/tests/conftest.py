import sys

import numpy as np
import pytest

from dopmimo.config import SystemConfig
from dopmimo.geometry import build_deployment
from dopmimo.randmat import derive_rng, make_pilots, sample_channels


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


def small_instance(seed, **kw):
    """Deployment, pilots and channels for a small seeded scenario."""
    cfg = SystemConfig(**{"L": 7, "K": 3, "N": 6, "tau": 5, **kw})
    r = derive_rng(seed, "instance")
    dep = build_deployment(cfg, r)
    return cfg, dep, make_pilots(cfg, r), sample_channels(cfg, r)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "VERDICTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[num])
