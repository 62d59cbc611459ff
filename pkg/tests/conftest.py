import json
from pathlib import Path

import numpy as np
import pytest

from fuzzyirtree import ModelSpec, ParamVector, linear_tree, nested_tree
from fuzzyirtree.simulate import SimConfig, make_rng, sample_dataset

DATA_DIR = Path(__file__).parent / "data"
THETA0 = ParamVector.make([-1.0], [1.0], 0.5)


def recovery_dataset(seed, theta=THETA0, n=500):
    """Linear M=4 design with one N(0,1) covariate ``x``; mirrors tools/pin_recovery_sds.py."""
    x = make_rng(seed + 1000).standard_normal(n)
    return sample_dataset(SimConfig(theta, linear_tree(4), x[:, None], seed, {"x": x}))


def random_theta(rng, tree, n_beta=1, sigma_range=(0.05, 3.5)):
    """Feasible parameters: alpha per node, beta, sigma drawn from ``sigma_range``."""
    ab = rng.uniform(-1.5, 1.5, size=tree.N + n_beta)
    used = np.abs(ab).sum()
    if used > 4.9:
        ab *= 4.9 / used
    return ParamVector(ab[:tree.N], ab[tree.N:], rng.uniform(*sigma_range))


@pytest.fixture(scope="session")
def trees():
    return {"linear4": linear_tree(4), "linear5": linear_tree(5), "nested": nested_tree()}


@pytest.fixture(scope="session")
def recovery_pins():
    return json.loads((DATA_DIR / "recovery_mc.json").read_text())


@pytest.fixture(scope="session")
def spec_x():
    return ModelSpec.build("linear", 4, "x")


ACCEPTANCE_LINES = []


def record_criterion(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
