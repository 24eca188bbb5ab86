"""
================================================================================
01. A tour of the curve distances
================================================================================

Build a B-spline basis, smooth two simulated classes of curves, estimate the
functional principal components and compare the distances the classifiers
are built on.
"""
########################################################################################################################
# Setup
# -----
# Only numpy and fmahal are needed.
import numpy as np

import fmahal
from fmahal import LabeledSample, ScenarioConfig, build_bspline_basis, fit_fpca, generate_dataset, smooth_curves
from fmahal.basis import FunctionalDatum
from fmahal.distances import DistanceSpec, d_dh, distance

print("fmahal version:", fmahal.__version__)

########################################################################################################################
# Simulated curves
# ----------------
# Scenario 1 gives two classes that share a Gaussian covariance and differ in
# their mean functions.  Each curve is observed on 50 points with noise.
cfg = ScenarioConfig(1, n_per_class=(60, 60), n_train_per_class=(60, 60))
data = generate_dataset(cfg, seed=7)
print("raw values:", data.values.shape, "labels:", np.bincount(data.labels)[1:])

########################################################################################################################
# Smoothing
# ---------
# Every curve is projected by least squares onto 20 order-6 B-splines.
basis = build_bspline_basis((0.0, 1.0), order=6, num_basis=20)
C = smooth_curves(basis, data.grid, data.values)
sample = LabeledSample(basis, C, data.labels, 2)
print("coefficients:", C.shape)

########################################################################################################################
# Principal components
# --------------------
# The pooled model centers each curve at its own class mean and shares one
# covariance operator.  Its eigenvalues decay quickly.
pooled = fit_fpca(sample, "pooled")
lam = pooled.eigenvalues
print("leading eigenvalues:", np.round(lam[:6], 4))
print("share of variance in first 5:", round(float(lam[:5].sum() / lam.sum()), 3))

########################################################################################################################
# Distances between two curves
# ----------------------------
# Take one curve from each class.  L2 ignores the covariance.  The FPC
# distance keeps only the leading directions.  The functional Mahalanobis
# distance also divides every direction by its standard deviation, so the
# value keeps growing as more components are added.
f = FunctionalDatum(basis, C[0])
g = FunctionalDatum(basis, C[-1])
print("L1  =", round(distance(DistanceSpec("L1"), f, g), 4))
print("L2  =", round(distance(DistanceSpec("L2"), f, g), 4))
print("Linf=", round(distance(DistanceSpec("Linf"), f, g), 4))
for K in (1, 3, 5, 10):
    fpc = distance(DistanceSpec("FPC_C", K, pooled), f, g)
    fm = distance(DistanceSpec("FM_C", K, pooled), f, g)
    print(f"K={K:2d}  FPC_C={fpc:.4f}  FM_C={fm:.4f}")

########################################################################################################################
# Distances to the class centres
# ------------------------------
# DH projects a curve's offset from a class mean onto the standardized
# direction that separates the two means.  A class-1 curve usually gives a
# small value for class 1 and a large one for class 2.
for cls in (1, 2):
    print(f"DH to class {cls}:", round(d_dh(DistanceSpec("DH", 5, pooled), f, cls), 4))
