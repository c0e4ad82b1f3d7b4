"""Shared flow runs and the acceptance summary printed after the session."""
from __future__ import annotations

import numpy as np
import pytest

from cryamabe.flow import FlowConfig, Perturbation, run
from cryamabe.initial_data import TorsionFreeParams
from cryamabe.sphere import build_grid

TORSION_FREE = TorsionFreeParams(0.1, 0.05, 1.0)
RUN_N = 32

# criterion number -> (status, line); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def record(number, ok, text):
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE[number] = (status, f"[{status}] criterion {number:2d}: {text}")
    print(ACCEPTANCE[number][1])
    return ok


@pytest.fixture(scope="session")
def torsion_free_run():
    """Torsion-free data to t = 0.25 on 32^3 with Cartan monitoring and
    snapshots every 0.01."""
    cfg = FlowConfig(grid=build_grid(RUN_N, RUN_N, RUN_N), initial=TORSION_FREE, t_end=0.25,
                     sigma=0.25, t_min=0.01, snapshots_every=0.01, cartan=True)
    return run(cfg)


@pytest.fixture(scope="session")
def constant_run():
    """lambda = 0 to t = 0.25 on 32^3, adaptive RK4 with sigma = 0.25."""
    cfg = FlowConfig(grid=build_grid(RUN_N, RUN_N, RUN_N), initial=None, t_end=0.25,
                     sigma=0.25, integrator="rk4")
    return run(cfg)


@pytest.fixture(scope="session")
def perturbed_run():
    """Torsion-free data plus a smooth perturbation, 16^3, to t = 0.1."""
    cfg = FlowConfig(grid=build_grid(16, 16, 16), initial=TORSION_FREE,
                     perturbation=Perturbation(amplitude=0.05, seed=3, degree=2),
                     t_end=0.1, t_min=0.01, snapshots_every=0.02)
    return run(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n][1])
    n_pass = sum(s == "PASS" for s, _ in ACCEPTANCE.values())
    terminalreporter.write_line(f"{n_pass}/{len(ACCEPTANCE)} criteria pass")
