"""Bergman kernel laboratory.

Numerical experiments on the semiclassical expansion of weighted Bergman kernels.
"""

__version__ = "0.1.0"
