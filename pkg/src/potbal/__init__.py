"""potbal: numerical potential theory on planar and low-dimensional domains.

Kernels and Riesz constants, domain geometry, grid fields, discrete
measures, Green's functions (closed form / walk-on-spheres / grid),
potentials and the measure-potential duality, quantitative subharmonic
gluing, balayage margin checks, and zero-set criteria for holomorphic
functions on the disc.
"""

from .accel import BACKEND, HAVE_FAST

__version__ = "0.1.0"

__all__ = ["BACKEND", "HAVE_FAST", "__version__"]
