"""Independent reference computations used by tests and ``self-test``.

Nothing here shares code with the fast paths it checks.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from typing import Sequence

import numpy as np


def expand_creation_operators(u, inp: Sequence[int]) -> dict[tuple[int, ...], complex]:
    """Output amplitudes of ``U|inp>`` by expanding the creation-operator polynomial.

    Each input operator a_i^dag is rewritten as sum_j U[j, i] b_j^dag, the
    product is multiplied out monomial by monomial, and every monomial
    prod_j (b_j^dag)^k_j |0> is converted to sqrt(prod k_j!) |k>.
    """
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    poly: dict[tuple[int, ...], complex] = {tuple([0] * m): 1.0 + 0j}
    for i, count in enumerate(inp):
        for _ in range(count):
            nxt: dict[tuple[int, ...], complex] = defaultdict(complex)
            for mono, c in poly.items():
                for j in range(m):
                    if u[j, i] == 0:
                        continue
                    k = list(mono)
                    k[j] += 1
                    nxt[tuple(k)] += c * u[j, i]
            poly = dict(nxt)
    in_norm = math.sqrt(math.prod(math.factorial(n) for n in inp))
    return {
        k: c * math.sqrt(math.prod(math.factorial(n) for n in k)) / in_norm
        for k, c in poly.items()
    }


def permanent_by_permutations(a) -> complex:
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    return complex(sum(math.prod(a[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))))


def basis_by_product(mode_count: int, photon_count: int) -> list[tuple[int, ...]]:
    """Occupation lists by filtering the full product space."""
    return [
        occ
        for occ in itertools.product(range(photon_count + 1), repeat=mode_count)
        if sum(occ) == photon_count
    ]


def all_click_probability_by_enumeration(photons: int, branches: Sequence[float]) -> float:
    """P(every branch gets >= 1 photon), enumerating all branch assignments."""
    k = len(branches)
    total = 0.0
    for assign in itertools.product(range(k), repeat=photons):
        if len(set(assign)) == k:
            total += math.prod(branches[b] for b in assign)
    return total


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def fidelity_quadrature(contrast: float, points: int = 20001) -> float:
    """Average fidelity by direct evaluation of the overlap on a fine grid (Simpson)."""
    from scipy.integrate import simpson

    phi = np.linspace(-np.pi / 2, np.pi / 2, points)
    p1 = (1 - contrast * np.cos(phi)) / 2
    overlap = np.cos(phi / 2) * np.sqrt(1 - p1) + np.abs(np.sin(phi / 2)) * np.sqrt(p1)
    return float(simpson(overlap**2, x=phi) / np.pi)
