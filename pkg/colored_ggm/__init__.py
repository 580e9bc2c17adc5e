"""
Colored graphical Gaussian model selection by penalized composite likelihood.

Estimates sparse, symmetry-constrained precision matrices and recovers the
vertex/edge color classes of the underlying colored graph.
"""

__version__ = "1.0.0"
