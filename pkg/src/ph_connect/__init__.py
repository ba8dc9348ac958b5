"""Persistent homology of multi-channel time series.

Two filtrations (Vietoris-Rips on sliding-window point clouds; sublevel
graph filtration on positively-gated correlation networks), Wasserstein
and bottleneck distances between the resulting diagrams, rank-sum group
statistics, and desk-scale classifiers over the derived features.
"""

__version__ = "0.1.0"
