"""
================================================================================
02. Classifying one simulated split end to end
================================================================================

Draw one training/test split, tune each classifier by cross-validation and
compare test accuracies.  A small Monte Carlo run closes the walkthrough.
"""
########################################################################################################################
# Setup
# -----
import numpy as np

from fmahal import (
    LabeledSample,
    ScenarioConfig,
    TuningGrid,
    build_bspline_basis,
    cross_validate,
    generate_dataset,
    run_monte_carlo,
    smooth_curves,
    train,
)
from fmahal.report import render_table

########################################################################################################################
# One split
# ---------
# The standard sizes are 100 curves per class, 75 of which go to training.
cfg = ScenarioConfig.standard(2, n=200)
data = generate_dataset(cfg, seed=11)
basis = build_bspline_basis((0.0, 1.0), cfg.basis_order, cfg.num_basis)
C = smooth_curves(basis, data.grid, data.values)
tr = LabeledSample(basis, C[data.train_idx], data.labels[data.train_idx], 2)
C_test, y_test = C[data.test_idx], data.labels[data.test_idx]
print("train:", tr.counts.tolist(), "test:", np.bincount(y_test)[1:].tolist())

########################################################################################################################
# Tune and test
# -------------
# Cross-validation picks the truncation and the number of neighbours.  A
# coarse grid keeps the demo quick.
grid = TuningGrid(max_components=8, neighbor_values=(1, 3, 5, 7), folds=5)
for method, kind in [("knn", "L2"), ("knn", "FM_C"), ("knn", "FM_D"), ("centroid", "FM_C"), ("flbcr", None)]:
    cv = cross_validate(tr, method, kind, grid, seed=0)
    clf = train(tr, method, kind, cv.truncation, cv.k_neighbors)
    acc = np.mean(clf.predict(C_test) == y_test)
    name = method if kind is None else f"{method}:{kind}"
    print(f"{name:14s} K={cv.truncation}  k={cv.k_neighbors}  cv={cv.cv_accuracy:.3f}  test={acc:.3f}")

########################################################################################################################
# A short Monte Carlo run
# -----------------------
# Each replication draws fresh data and retunes every method.  Five
# replications are far too few for firm conclusions but show the output.
res = run_monte_carlo(cfg, ("knn:L2", "knn:FM_D", "flbcr"), replications=5, seed=1, grid=grid)
print(render_table(res.summary(), "accuracy", "Scenario 2, 5 replications"))
