"""Linear-optical elements and their action on Fock states.

Conventions
-----------
A directional coupler of reflectivity ``eta`` acts on its mode pair as::

    [[sqrt(1-eta), i*sqrt(eta)],
     [i*sqrt(eta), sqrt(1-eta)]]

so ``eta`` is the cross-coupling probability. A phase shifter multiplies its
mode by ``exp(i*phi)``. Matrices act on creation operators,
``a_in[i]^dag -> sum_j U[j, i] a_out[j]^dag``, and element lists are applied
first-to-last.

The Mach-Zehnder built here differs from the textbook
``[[sin, cos], [cos, -sin]]`` form by a global phase only; compare
probabilities, not raw matrix phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .fock import FockState, FockVector, enumerate_basis

UNITARY_TOL = 1e-10


class ModeUnitary:
    """An m x m unitary on mode creation operators; checked on construction."""

    __slots__ = ("matrix",)

    def __init__(self, matrix, check: bool = True):
        u = np.array(matrix, dtype=complex)
        if u.ndim != 2 or u.shape[0] != u.shape[1]:
            raise ValueError(f"mode unitary must be square, got shape {u.shape}")
        if check:
            err = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) if u.size else 0.0
            if err > UNITARY_TOL:
                raise ValueError(f"matrix is not unitary (max |UU^dag - I| = {err:.3g})")
        u.setflags(write=False)
        self.matrix = u

    @property
    def mode_count(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other: "ModeUnitary") -> "ModeUnitary":
        return ModeUnitary(self.matrix @ other.matrix)

    def __getitem__(self, idx):
        return self.matrix[idx]

    def __repr__(self):
        return f"ModeUnitary({np.array2string(self.matrix, precision=4)})"

    @classmethod
    def identity(cls, m: int) -> "ModeUnitary":
        return cls(np.eye(m, dtype=complex), check=False)


def _check_mode(mode: int, mode_count: int):
    if not 0 <= mode < mode_count:
        raise ValueError(f"mode index {mode} out of range for {mode_count} modes")


def coupler_unitary(eta: float, mode_pair: Sequence[int] = (0, 1), mode_count: int = 2) -> ModeUnitary:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"coupler reflectivity must lie in [0, 1], got {eta}")
    i, j = mode_pair
    _check_mode(i, mode_count)
    _check_mode(j, mode_count)
    if i == j:
        raise ValueError("coupler needs two distinct modes")
    t, r = math.sqrt(1.0 - eta), math.sqrt(eta)
    u = np.eye(mode_count, dtype=complex)
    u[i, i] = u[j, j] = t
    u[i, j] = u[j, i] = 1j * r
    return ModeUnitary(u)


def phase_unitary(phi: float, mode: int = 1, mode_count: int = 2) -> ModeUnitary:
    if not math.isfinite(phi):
        raise ValueError("phase must be finite")
    _check_mode(mode, mode_count)
    u = np.eye(mode_count, dtype=complex)
    u[mode, mode] = np.exp(1j * phi)
    return ModeUnitary(u)


@dataclass(frozen=True)
class Coupler:
    eta: float
    modes: tuple[int, int] = (0, 1)

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"coupler reflectivity must lie in [0, 1], got {self.eta}")
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        if len(self.modes) != 2 or self.modes[0] == self.modes[1]:
            raise ValueError("coupler needs two distinct modes")

    def unitary(self, mode_count: int) -> ModeUnitary:
        return coupler_unitary(self.eta, self.modes, mode_count)

    @property
    def mode_indices(self):
        return self.modes


@dataclass(frozen=True)
class PhaseShift:
    phi: float
    mode: int = 1

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("phase must be finite")

    @property
    def reduced_phase(self) -> float:
        """Phase wrapped into [-pi, pi) for reporting."""
        return (self.phi + math.pi) % (2 * math.pi) - math.pi

    def unitary(self, mode_count: int) -> ModeUnitary:
        return phase_unitary(self.phi, self.mode, mode_count)

    @property
    def mode_indices(self):
        return (self.mode,)


CircuitElement = Union[Coupler, PhaseShift]


@dataclass(frozen=True)
class Circuit:
    mode_count: int
    elements: tuple = ()

    def __post_init__(self):
        if self.mode_count < 1:
            raise ValueError("a circuit needs at least one mode")
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            for m in el.mode_indices:
                _check_mode(m, self.mode_count)

    def then(self, element: CircuitElement) -> "Circuit":
        return Circuit(self.mode_count, self.elements + (element,))


def compose(circuit: Circuit) -> ModeUnitary:
    """Overall mode unitary; the first element acts first."""
    u = np.eye(circuit.mode_count, dtype=complex)
    for el in circuit.elements:
        u = el.unitary(circuit.mode_count).matrix @ u
    return ModeUnitary(u)


def mz_interferometer(phi: float) -> Circuit:
    """50:50 coupler, phase on the lower arm, 50:50 coupler."""
    return Circuit(2, (Coupler(0.5), PhaseShift(phi, 1), Coupler(0.5)))


def effective_reflectivity(u: ModeUnitary | Circuit) -> float:
    """|U[0, 0]|^2; for the MZ this is sin^2(phi/2)."""
    if isinstance(u, Circuit):
        u = compose(u)
    return float(abs(u.matrix[0, 0]) ** 2)


def permanent(a) -> complex:
    """Matrix permanent by Ryser's formula with Gray-code subset order.

    O(2^n n). Each step flips one column in or out of the running row sums.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    sign = -1.0  # (-1)^|S| for the current subset
    gray = 0
    for k in range(1, 2 ** n):
        # column whose bit flips between gray(k-1) and gray(k)
        j = (k & -k).bit_length() - 1
        bit = 1 << j
        if gray & bit:
            row_sums -= a[:, j]
        else:
            row_sums += a[:, j]
        gray ^= bit
        total += sign * np.prod(row_sums)
        sign = -sign
    return complex((-1) ** n * total)


def _repeat_indices(occ: Sequence[int]) -> list[int]:
    return [i for i, n in enumerate(occ) for _ in range(n)]


def transition_amplitude(u: ModeUnitary, inp: Sequence[int], out: Sequence[int]) -> complex:
    """<out| U |inp> for basis states, via the permanent of the repeated submatrix."""
    cols = _repeat_indices(inp)
    rows = _repeat_indices(out)
    if len(rows) != len(cols):
        raise ValueError("input and output photon numbers differ")
    sub = u.matrix[np.ix_(rows, cols)]
    norm = math.prod(math.factorial(n) for n in inp) * math.prod(math.factorial(n) for n in out)
    return permanent(sub) / math.sqrt(norm)


def evolve(state: FockVector, u: ModeUnitary | Circuit) -> FockVector:
    """Apply a linear-optical unitary to a Fock-space vector."""
    if isinstance(u, Circuit):
        u = compose(u)
    m = u.mode_count
    if state.mode_count != m:
        raise ValueError(f"state has {state.mode_count} modes, unitary has {m}")
    out: dict[FockState, complex] = {}
    basis_cache: dict[int, list[FockState]] = {}
    for s, amp in state.terms.items():
        n = s.photon_count
        if n not in basis_cache:
            basis_cache[n] = enumerate_basis(m, n)
        for t in basis_cache[n]:
            out[t] = out.get(t, 0j) + amp * transition_amplitude(u, s.occupations, t.occupations)
    return FockVector(out, m)
