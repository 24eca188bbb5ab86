"""Functional data classification with Mahalanobis-type semi-distances.

Curves are represented in a B-spline basis, summarized by functional
principal components, and classified with k-nearest-neighbour, centroid and
Gaussian Bayes rules under L^p, FPC, functional Mahalanobis and
Mahalanobis-type distances.
"""

__version__ = "0.1.0"

from .basis import (
    BasisSystem,
    FunctionalDatum,
    build_bspline_basis,
    derivative,
    evaluate,
    inner_product,
    smooth_curve,
    smooth_curves,
)
from .classifiers import TrainedClassifier, prepare, train
from .distances import DistanceSpec, d_dh, d_fm, d_fpc, d_lp, distance
from .errors import FdaError
from .fpca import FpcaModel, LabeledSample, fit_fpca, scores, standardized_scores
from .harness import STANDARD_METHODS, ExperimentResult, evaluate_split
from .simulate import ScenarioConfig, generate_dataset, run_monte_carlo
from .tuning import CVResult, TuningGrid, cross_validate

__all__ = [
    "BasisSystem", "FunctionalDatum", "build_bspline_basis", "derivative", "evaluate",
    "inner_product", "smooth_curve", "smooth_curves",
    "TrainedClassifier", "prepare", "train",
    "DistanceSpec", "d_dh", "d_fm", "d_fpc", "d_lp", "distance",
    "FdaError",
    "FpcaModel", "LabeledSample", "fit_fpca", "scores", "standardized_scores",
    "STANDARD_METHODS", "ExperimentResult", "evaluate_split",
    "ScenarioConfig", "generate_dataset", "run_monte_carlo",
    "CVResult", "TuningGrid", "cross_validate",
]
