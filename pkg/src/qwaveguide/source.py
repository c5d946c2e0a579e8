"""Two-mode photon-pair source with multi-pair emission."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .fock import FockVector, normalize


def geometric_profile(n: int) -> float:
    return 1.0


@dataclass(frozen=True)
class SpdcSource:
    """Pair amplitude ``lam`` (monotone in pump power) and truncation ``n_max``.

    The unnormalized state is ``sum_n profile(n) * lam**n |n, n>`` for
    ``n = 0..n_max``. ``profile`` defaults to 1 (single Schmidt mode).
    """

    lam: float
    n_max: int = 3
    profile: Callable[[int], float] = geometric_profile

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"pair amplitude must lie in [0, 1), got {self.lam}")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    def pair_weights(self) -> list[float]:
        """Normalized probabilities of emitting n = 0..n_max pairs."""
        w = [(self.profile(n) * self.lam**n) ** 2 for n in range(self.n_max + 1)]
        total = sum(w)
        return [x / total for x in w]


def spdc_state(src: SpdcSource) -> FockVector:
    terms = {(n, n): src.profile(n) * src.lam**n for n in range(src.n_max + 1)}
    return normalize(FockVector(terms, 2))


def post_selected_input(src: SpdcSource, pairs: int) -> FockVector:
    """The pure ``|pairs, pairs>`` term, i.e. ideal heralded operation."""
    if pairs < 0:
        raise ValueError("pairs must be >= 0")
    if pairs > src.n_max:
        raise ValueError(f"pairs={pairs} exceeds source truncation n_max={src.n_max}")
    return FockVector.basis((pairs, pairs))
