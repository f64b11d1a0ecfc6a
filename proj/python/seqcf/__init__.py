"""Counterfactual inference for sequential experiments.

Thin package wrapper around the compiled extension: simulation of latent
factor experiments under adaptive policies, thresholded nearest-neighbor
estimation of unit-by-time counterfactual means, interval construction,
threshold/variance calibration, and error-bound diagnostics.
"""

try:
    # Installed layout: the extension lives inside the package.
    from seqcf._seqcf import *  # noqa: F401,F403
except ImportError:
    # Build-tree layout: the extension sits on PYTHONPATH.
    from _seqcf import *  # noqa: F401,F403

__all__ = [name for name in dir() if not name.startswith("_")]
