"""
Sublinear Estimators
Query-model estimators for set cover, random greedy maximal matching and metric
Steiner tree, with exact baselines and a benchmark harness
"""

__version__ = "1.0.0"
__description__ = "Sublinear-query estimators for set cover and metric Steiner tree"
