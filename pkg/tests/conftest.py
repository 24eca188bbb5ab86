from pathlib import Path

import pytest

from fmahal.basis import build_bspline_basis, smooth_curves
from fmahal.fpca import LabeledSample
from fmahal.simulate import ScenarioConfig, generate_dataset

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def basis():
    return build_bspline_basis((0.0, 1.0), 6, 20)


def scenario_sample(scenario=1, n_per_class=(100, 100), seed=0, grid_size=50, noise=0.01):
    """Smoothed simulated curves; all of them, ignoring the train/test split."""
    cfg = ScenarioConfig(scenario, n_per_class, (0, 0), grid_size, noise)
    data = generate_dataset(cfg, seed)
    b = build_bspline_basis((0.0, 1.0), 6, 20)
    return LabeledSample(b, smooth_curves(b, data.grid, data.values), data.labels, 2)


@pytest.fixture(scope="session")
def sample():
    return scenario_sample(1, (40, 40), seed=3)


@pytest.fixture(scope="session")
def sample2():
    return scenario_sample(2, (40, 40), seed=4)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
