"""Near-resonant approximation of the rotating stratified Boussinesq system.

Subpackages cover the spectral lattice and eigenframes (:mod:`nrbous.spectral`),
resonance sets and lattice counts (:mod:`nrbous.resonance`), interaction
coefficients (:mod:`nrbous.coefficients`), the bilinear and dissipative
operators (:mod:`nrbous.operators`), time integration (:mod:`nrbous.solver`)
and the experiment drivers behind the ``nrbous`` command.
"""

__version__ = "0.1.0"

from .errors import DomainError, ResourceError, StepRejected  # noqa: F401
from .spectral import (  # noqa: F401
    DomainParams,
    SpectralField,
    SpectralScalarField,
    WaveVector,
    dispersion,
    eigenframe,
    get_lattice,
)
from .resonance import BandwidthSpec  # noqa: F401
