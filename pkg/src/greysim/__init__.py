"""Generalized grey Brownian motion toolkit.

Special functions (Mittag-Leffler, M-Wright), samplers for the mixing variable
and ggBm paths, fBm generators, pathwise Young integrals, an Euler solver for
grey-noise SDEs, density tools and a verification harness.
"""

from .fbm import SamplePath, TimeGrid, generate_fbm
from .report import RunReport
from .rng import RngStream
from .sampler import sample_ggbm_marginal, sample_ggbm_path, sample_ggbm_paths, sample_y
from .specfun import DomainError, GreyParams, m_wright_cdf, m_wright_pdf, mittag_leffler

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "GreyParams",
    "RngStream",
    "RunReport",
    "SamplePath",
    "TimeGrid",
    "generate_fbm",
    "m_wright_cdf",
    "m_wright_pdf",
    "mittag_leffler",
    "sample_ggbm_marginal",
    "sample_ggbm_path",
    "sample_ggbm_paths",
    "sample_y",
]
