"""Karhunen-Loeve simulation of two-class functional data and Monte Carlo runs.

Scenario layout (all on [0, 1], eigenfunctions sqrt(2) sin((k - 1/2) pi t),
base eigenvalues 1 / ((k - 1/2) pi)^2):

==========  =====================  ===============
scenario    class-2 eigenvalues    score law
==========  =====================  ===============
1           same as class 1        Gaussian
2           doubled                Gaussian
3           same as class 1        centred exponential
4           doubled                centred exponential
==========  =====================  ===============
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .basis import build_bspline_basis, smooth_curves
from .errors import FdaError, InvalidConfigurationError
from .fpca import LabeledSample
from .harness import STANDARD_METHODS, ExperimentResult, ReplicationRecord, evaluate_split, parse_method
from .tuning import TuningGrid

log = logging.getLogger(__name__)

MAX_RETRIES = 3
SCORE_LAWS = ("gaussian", "exponential")


def mean_function(g: int, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if g == 1:
        return 20.0 * t ** 1.1 * (1.0 - t)
    if g == 2:
        return 20.0 * t * (1.0 - t) ** 1.1
    raise InvalidConfigurationError(f"class must be 1 or 2, got {g}")


def eigenfunctions(t, K: int) -> np.ndarray:
    """``(len(t), K)`` matrix of ``sqrt(2) sin((k - 1/2) pi t)``."""
    t = np.asarray(t, dtype=float)
    k = np.arange(1, K + 1)
    return np.sqrt(2.0) * np.sin((k - 0.5) * np.pi * t[:, None])


def base_eigenvalues(K: int) -> np.ndarray:
    k = np.arange(1, K + 1)
    return 1.0 / ((k - 0.5) * np.pi) ** 2


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation setting.

    ``n_per_class`` and ``n_train_per_class`` hold ``(n_1, n_2)`` and
    ``(n_10, n_20)``; the rest of each class is the test sample.
    """

    scenario_id: int = 1
    n_per_class: tuple[int, int] = (100, 100)
    n_train_per_class: tuple[int, int] = (75, 75)
    grid_size: int = 50
    noise_variance: float = 0.01
    kl_truncation: int = 50
    basis_order: int = 6
    num_basis: int = 20

    def __post_init__(self):
        if self.scenario_id not in (1, 2, 3, 4):
            raise InvalidConfigurationError(f"scenario must be 1..4, got {self.scenario_id}")
        for n, n0 in zip(self.n_per_class, self.n_train_per_class):
            if not 0 <= n0 <= n:
                raise InvalidConfigurationError(f"training size {n0} not in 0..{n}")
        if self.noise_variance < 0:
            raise InvalidConfigurationError("noise variance must be >= 0")
        if self.kl_truncation < 0 or self.grid_size < 2:
            raise InvalidConfigurationError("need kl_truncation >= 0 and grid_size >= 2")

    @classmethod
    def standard(cls, scenario_id: int, n: int = 200, grid_size: int = 50, **kw) -> "ScenarioConfig":
        """The standard sample-size configurations, ``n`` in ``{200, 300}``."""
        sizes = {200: ((100, 100), (75, 75)), 300: ((150, 150), (120, 120))}
        if n not in sizes:
            raise InvalidConfigurationError(f"n must be 200 or 300, got {n}")
        per, tr = sizes[n]
        return cls(scenario_id, per, tr, grid_size, **kw)

    @property
    def score_law(self) -> str:
        return "gaussian" if self.scenario_id in (1, 2) else "exponential"

    def eigenvalues(self, g: int) -> np.ndarray:
        scale = 2.0 if (g == 2 and self.scenario_id in (2, 4)) else 1.0
        return scale * base_eigenvalues(self.kl_truncation)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.grid_size)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SimulatedData:
    grid: np.ndarray
    values: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    scores: np.ndarray


def draw_scores(law: str, eigenvalues, n: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, K)`` independent scores with zero mean and variances ``eigenvalues``."""
    sd = np.sqrt(np.asarray(eigenvalues, dtype=float))
    if law == "gaussian":
        return rng.standard_normal((n, sd.size)) * sd
    if law == "exponential":
        return (rng.standard_exponential((n, sd.size)) - 1.0) * sd
    raise InvalidConfigurationError(f"unknown score law {law!r}")


def generate_dataset(cfg: ScenarioConfig, seed) -> SimulatedData:
    """Discretized noisy curves for both classes plus a random train/test split."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    t = cfg.grid
    psi = eigenfunctions(t, cfg.kl_truncation)
    values, labels, scores = [], [], []
    for g, n in zip((1, 2), cfg.n_per_class):
        theta = draw_scores(cfg.score_law, cfg.eigenvalues(g), n, rng)
        curves = mean_function(g, t) + theta @ psi.T
        if cfg.noise_variance > 0:
            curves = curves + rng.normal(0.0, np.sqrt(cfg.noise_variance), curves.shape)
        values.append(curves)
        labels.append(np.full(n, g))
        scores.append(theta)
    labels = np.concatenate(labels)
    train, test = [], []
    start = 0
    for n, n0 in zip(cfg.n_per_class, cfg.n_train_per_class):
        perm = start + rng.permutation(n)
        train.append(np.sort(perm[:n0]))
        test.append(np.sort(perm[n0:]))
        start += n
    return SimulatedData(
        t, np.vstack(values), labels, np.concatenate(train), np.concatenate(test), np.vstack(scores)
    )


def replication_seeds(seed: int, replication: int, attempt: int = 0):
    """Independent (data, cross-validation) seed sequences for one replication."""
    ss = np.random.SeedSequence([int(seed), int(replication), int(attempt)])
    return ss.spawn(2)


def run_replication(cfg: ScenarioConfig, methods, seed: int, replication: int, grid: TuningGrid) -> ReplicationRecord:
    """Generate, smooth, tune and classify once; retry on numerical failure."""
    basis = build_bspline_basis((0.0, 1.0), cfg.basis_order, cfg.num_basis)
    error = None
    for attempt in range(MAX_RETRIES + 1):
        data_ss, cv_ss = replication_seeds(seed, replication, attempt)
        try:
            data = generate_dataset(cfg, np.random.default_rng(data_ss))
            coeffs = smooth_curves(basis, data.grid, data.values)
            sample = LabeledSample(basis, coeffs, data.labels, 2)
            outcomes = evaluate_split(
                sample.subset(data.train_idx), sample.subset(data.test_idx), methods, grid, cv_ss
            )
            return ReplicationRecord(replication, attempt + 1, outcomes)
        except FdaError as exc:
            error = f"{type(exc).__name__}: {exc}"
            log.warning("replication %d attempt %d failed: %s", replication, attempt, error)
    return ReplicationRecord(replication, MAX_RETRIES + 1, None, error)


def _run_one(args):
    return run_replication(*args)


def run_monte_carlo(
    cfg: ScenarioConfig,
    methods=STANDARD_METHODS,
    replications: int = 100,
    seed: int = 0,
    grid: TuningGrid | None = None,
    jobs: int = 1,
) -> ExperimentResult:
    """Repeat :func:`run_replication` and collect the results.

    Replication ``r`` draws from ``SeedSequence([seed, r, attempt])`` only,
    so results do not depend on ``jobs`` or on evaluation order.
    """
    if replications < 1:
        raise InvalidConfigurationError("replications must be >= 1")
    methods = tuple(methods)
    for m in methods:
        parse_method(m)
    grid = grid or TuningGrid()
    tasks = [(cfg, methods, seed, r, grid) for r in range(replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_one, tasks))
    else:
        records = [_run_one(t) for t in tasks]
    return ExperimentResult(methods, records)
