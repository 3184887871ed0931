"""pacal: pointwise affine calculus on chart-based spaces.

A space is a box in R^n together with a frame field ``F``; the translation
acting at ``p`` sends ``v`` to ``p + F(p) v``.  The package builds discrete
deviations and curvatures from that action, their infinitesimal limits, field
derivatives, and a few applications (gradients, geodesics).
"""

from __future__ import annotations

from .errors import DomainError, LimitError, NumericError, PacalError, UsageError
from .gallery import GallerySpace, GallerySpec, build, make, standard_spaces
from .limits import DEFAULT_LIMIT, LimitConfig, LimitEstimate, richardson_limit
from .space import BoxDomain, FrameField, PointwiseSystem, constant_frame, is_affine_flat

__all__ = [
    "BoxDomain", "DEFAULT_LIMIT", "DomainError", "FrameField", "GallerySpace", "GallerySpec",
    "LimitConfig", "LimitError", "LimitEstimate", "NumericError", "PacalError",
    "PointwiseSystem", "UsageError", "build", "constant_frame", "is_affine_flat", "make",
    "richardson_limit", "standard_spaces",
]

__version__ = "0.1.0"
