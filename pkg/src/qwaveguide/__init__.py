"""Fock-space simulation of two-mode integrated photonic interferometers.

Submodules:

- ``fock``: Fock basis and sparse state vectors
- ``circuit``: couplers, phase shifters and permanent-based evolution
- ``source``: multi-pair photon sources
- ``detection``: detector models, distinguishability, count sampling
- ``analysis``: fringe, calibration and dip fits
- ``scenario`` / ``runner`` / ``cli``: declarative experiments and the command line
"""

from .circuit import Circuit, Coupler, ModeUnitary, PhaseShift, compose, evolve, mz_interferometer, permanent
from .fock import FockState, FockVector, enumerate_basis, fidelity, inner_product, normalize
from .source import SpdcSource, post_selected_input, spdc_state

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "Coupler",
    "FockState",
    "FockVector",
    "ModeUnitary",
    "PhaseShift",
    "SpdcSource",
    "compose",
    "enumerate_basis",
    "evolve",
    "fidelity",
    "inner_product",
    "mz_interferometer",
    "normalize",
    "permanent",
    "post_selected_input",
    "spdc_state",
]
