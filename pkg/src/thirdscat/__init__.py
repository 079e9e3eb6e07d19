"""Direct and inverse scattering for the third-order operator psi''' + Q psi' + P psi = k^3 psi."""

__version__ = "0.1.0"

from .geometry import Z, Z2, DomainError, Sector, XGrid, classify_k  # noqa: F401
from .potentials import PotentialPair, preset, from_samples  # noqa: F401
from .direct import (  # noqa: F401
    ScatteringDataset,
    SolutionProfile,
    build_mn,
    solve_basic,
    sweep_rays,
    transmission_from_wronskian,
)
