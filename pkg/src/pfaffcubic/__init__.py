"""Pfaffian representations of cubic surfaces over the complex numbers.

Given a homogeneous cubic f(x, y, z, t), build four 6x6 skew-symmetric
matrices A0..A3 with Pf(x*A0 + y*A1 + z*A2 + t*A3) = f, and certify the
result numerically at high precision.
"""

from .cubic_io import CubicSurface, parse_cubic
from .numerics import working_precision
from .pipeline import Options, PipelineResult, represent, verify_file
from .verifier import Certificate, LinearMatrix, certify, det_symbolic, pfaffian_symbolic

__all__ = [
    "Certificate",
    "CubicSurface",
    "LinearMatrix",
    "Options",
    "PipelineResult",
    "certify",
    "det_symbolic",
    "parse_cubic",
    "pfaffian_symbolic",
    "represent",
    "verify_file",
    "working_precision",
]

__version__ = "0.1.0"
