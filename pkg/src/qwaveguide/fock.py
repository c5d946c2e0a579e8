"""Occupation-number states of a few bosonic modes.

States are stored sparsely as a mapping from :class:`FockState` to a complex
amplitude. Canonical ordering everywhere is lexicographic *descending* on the
occupation tuple, so ``(2, 0)`` comes before ``(1, 1)`` before ``(0, 2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

TOL = 1e-12

# amplitudes below this magnitude are dropped from sparse storage
PRUNE = 1e-15


@dataclass(frozen=True, order=True)
class FockState:
    occupations: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(n) for n in self.occupations)
        if not occ:
            raise ValueError("a Fock state needs at least one mode")
        if any(n < 0 for n in occ):
            raise ValueError(f"negative occupation in {occ}")
        object.__setattr__(self, "occupations", occ)

    @property
    def mode_count(self) -> int:
        return len(self.occupations)

    @property
    def photon_count(self) -> int:
        return sum(self.occupations)

    def __iter__(self):
        return iter(self.occupations)

    def __getitem__(self, i):
        return self.occupations[i]

    def __len__(self):
        return len(self.occupations)

    def __repr__(self):
        return "|" + ",".join(map(str, self.occupations)) + ">"


def _as_state(s) -> FockState:
    return s if isinstance(s, FockState) else FockState(tuple(s))


def enumerate_basis(mode_count: int, photon_count: int) -> list[FockState]:
    """All occupation lists of ``photon_count`` photons over ``mode_count`` modes.

    Ordered lexicographically descending, e.g. ``(2, 1)`` gives
    ``[(1, 0), (0, 1)]``.
    """
    if mode_count < 1:
        raise ValueError("mode_count must be >= 1")
    if photon_count < 0:
        raise ValueError("photon_count must be >= 0")

    def rec(m, n):
        if m == 1:
            yield (n,)
            return
        for first in range(n, -1, -1):
            for rest in rec(m - 1, n - first):
                yield (first,) + rest

    return [FockState(occ) for occ in rec(mode_count, photon_count)]


@dataclass(frozen=True)
class FockVector:
    """Sparse complex superposition of Fock states on ``mode_count`` modes."""

    terms: Mapping[FockState, complex]
    mode_count: int = field(default=0)

    def __post_init__(self):
        terms = {}
        m = self.mode_count
        for s, a in dict(self.terms).items():
            s = _as_state(s)
            if m == 0:
                m = s.mode_count
            if s.mode_count != m:
                raise ValueError(f"state {s} does not have {m} modes")
            a = complex(a)
            if abs(a) > PRUNE:
                terms[s] = terms.get(s, 0j) + a
        if m < 1:
            raise ValueError("mode_count must be given for an empty vector")
        ordered = dict(sorted(terms.items(), key=lambda kv: kv[0], reverse=True))
        object.__setattr__(self, "terms", MappingProxyType(ordered))
        object.__setattr__(self, "mode_count", m)

    @classmethod
    def basis(cls, occupations: Iterable[int]) -> "FockVector":
        s = FockState(tuple(occupations))
        return cls({s: 1.0}, s.mode_count)

    @classmethod
    def from_pairs(cls, pairs, mode_count: int | None = None) -> "FockVector":
        """Build from ``[(occupations, amplitude), ...]``; repeated states add up."""
        terms: dict[FockState, complex] = {}
        for occ, amp in pairs:
            s = _as_state(occ)
            terms[s] = terms.get(s, 0j) + complex(amp)
        return cls(terms, mode_count or 0)

    def amplitude(self, occupations) -> complex:
        return self.terms.get(_as_state(occupations), 0j)

    def probability(self, occupations) -> float:
        return abs(self.amplitude(occupations)) ** 2

    def photon_numbers(self) -> set[int]:
        return {s.photon_count for s in self.terms}

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.terms.values()))

    def probabilities(self) -> dict[FockState, float]:
        return {s: abs(a) ** 2 for s, a in self.terms.items()}

    def scaled(self, factor: complex) -> "FockVector":
        return FockVector({s: factor * a for s, a in self.terms.items()}, self.mode_count)

    def __add__(self, other: "FockVector") -> "FockVector":
        if other.mode_count != self.mode_count:
            raise ValueError("mode-count mismatch")
        terms = dict(self.terms)
        for s, a in other.terms.items():
            terms[s] = terms.get(s, 0j) + a
        return FockVector(terms, self.mode_count)

    def __mul__(self, factor):
        return self.scaled(factor)

    __rmul__ = __mul__

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        if not self.terms:
            return f"FockVector(0, modes={self.mode_count})"
        return " + ".join(f"({a:.6g}){s!r}" for s, a in self.terms.items())

    def to_record(self) -> dict:
        """Plain-data record: mode count plus ``[occupations, re, im]`` triples."""
        return {
            "mode_count": self.mode_count,
            "terms": [[list(s.occupations), a.real, a.imag] for s, a in self.terms.items()],
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "FockVector":
        pairs = [(occ, complex(re, im)) for occ, re, im in record["terms"]]
        return cls.from_pairs(pairs, int(record["mode_count"]))

    def to_json(self) -> str:
        return json.dumps(self.to_record(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "FockVector":
        return cls.from_record(json.loads(text))


def inner_product(a: FockVector, b: FockVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.mode_count != b.mode_count:
        raise ValueError(f"mode-count mismatch: {a.mode_count} vs {b.mode_count}")
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for s in small.terms:
        if s in large.terms:
            total += a.terms[s].conjugate() * b.terms[s]
    return total


def normalize(v: FockVector) -> FockVector:
    nrm = v.norm()
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v.scaled(1.0 / nrm)


def fidelity(a: FockVector, b: FockVector) -> float:
    return abs(inner_product(normalize(a), normalize(b))) ** 2
