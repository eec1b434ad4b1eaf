"""Strongly convergent proximal splitting with Tikhonov damping.

Subpackages: core (schedules, tracing), operators (operator algebra),
fixed_point (damped fixed-point schemes), splitting (forward-backward,
Douglas-Rachford), primal_dual (coupled block schemes), imaging (blur,
wavelets, PGM), cli (deblurring driver).
"""

__version__ = "0.1.0"

from . import cli, core, fixed_point, imaging, operators, primal_dual, splitting

__all__ = ["cli", "core", "fixed_point", "imaging", "operators", "primal_dual",
           "splitting", "__version__"]
