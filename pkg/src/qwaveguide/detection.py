"""From output Fock vectors to measurable event rates.

Covers exact photon-number post-selection, partially distinguishable photon
pairs, detector efficiency (as a scale factor or as binomial thinning),
click/no-click detectors behind fibre-splitter cascades, and Poisson count
sampling.

Sweep records are written as CSV with a fixed column order::

    setting,ideal_probability,counts,error

preceded by ``#``-prefixed metadata lines, the first of which is always
``# schema-version: 1``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import Circuit, ModeUnitary, compose, evolve, permanent
from .fock import FockState, FockVector, enumerate_basis

SCHEMA_VERSION = 1
SWEEP_COLUMNS = ("setting", "ideal_probability", "counts", "error")
SETTING_KINDS = ("phase", "voltage", "delay", "reflectivity", "pair_amplitude")


@dataclass(frozen=True)
class DetectionPattern:
    """Required photon numbers on monitored output modes; other modes are ignored."""

    counts: Mapping[int, int]

    def __post_init__(self):
        c = {int(k): int(v) for k, v in dict(self.counts).items()}
        if any(k < 0 for k in c):
            raise ValueError("mode indices must be >= 0")
        if any(v < 0 for v in c.values()):
            raise ValueError("required counts must be >= 0")
        object.__setattr__(self, "counts", dict(sorted(c.items())))

    @classmethod
    def of(cls, *required: int) -> "DetectionPattern":
        """Pattern on modes 0..k-1, e.g. ``DetectionPattern.of(3, 1)``."""
        return cls(dict(enumerate(required)))

    @property
    def photons(self) -> int:
        return sum(self.counts.values())

    def matches(self, occupations: Sequence[int]) -> bool:
        return all(occupations[m] == n for m, n in self.counts.items())

    def mirrored(self) -> "DetectionPattern":
        """Swap modes 0 and 1."""
        swap = {0: 1, 1: 0}
        return DetectionPattern({swap.get(m, m): n for m, n in self.counts.items()})


def outcome_probability(state: FockVector, pattern: DetectionPattern) -> float:
    for m in pattern.counts:
        if m >= state.mode_count:
            raise ValueError(f"pattern mode {m} outside {state.mode_count}-mode state")
    p = sum(abs(a) ** 2 for s, a in state.terms.items() if pattern.matches(s.occupations))
    return float(min(max(p, 0.0), 1.0))


def combined_outcome_probability(state: FockVector, patterns: Iterable[DetectionPattern]) -> float:
    """Probability of observing any of several mutually exclusive patterns."""
    patterns = list(patterns)
    for pat in patterns:
        for m in pat.counts:
            if m >= state.mode_count:
                raise ValueError(f"pattern mode {m} outside {state.mode_count}-mode state")
    p = sum(
        abs(a) ** 2
        for s, a in state.terms.items()
        if any(pat.matches(s.occupations) for pat in patterns)
    )
    return float(min(p, 1.0))


# --- distinguishability -----------------------------------------------------


def _repeat(occ):
    return [i for i, n in enumerate(occ) for _ in range(n)]


def distinguishable_transition_probability(u: ModeUnitary, inp: Sequence[int], out: Sequence[int]) -> float:
    """Transition probability for mutually distinguishable photons.

    Each photon travels independently, so the probability is the permanent of
    the |U|^2 submatrix divided by the multiplicity of identical output slots.
    """
    rows, cols = _repeat(out), _repeat(inp)
    if len(rows) != len(cols):
        return 0.0
    sub = np.abs(u.matrix[np.ix_(rows, cols)]) ** 2
    return float(permanent(sub).real / math.prod(math.factorial(n) for n in out))


def _pattern_probability_for(u: ModeUnitary, inp, pattern: DetectionPattern, indistinguishable: bool) -> float:
    if indistinguishable:
        return outcome_probability(evolve(FockVector.basis(inp), u), pattern)
    return sum(
        distinguishable_transition_probability(u, inp, t.occupations)
        for t in enumerate_basis(u.mode_count, sum(inp))
        if pattern.matches(t.occupations)
    )


def distinguishable_mixture_probability(
    circuit: Circuit | ModeUnitary,
    input_occupations: Sequence[int],
    pattern: DetectionPattern,
    overlap: float,
) -> float:
    """x * P(indistinguishable) + (1 - x) * P(distinguishable) for overlap x."""
    if not 0.0 <= overlap <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {overlap}")
    u = compose(circuit) if isinstance(circuit, Circuit) else circuit
    inp = tuple(int(k) for k in input_occupations)
    if len(inp) != u.mode_count:
        raise ValueError("input occupations do not match the circuit's mode count")
    p_ind = _pattern_probability_for(u, inp, pattern, True)
    p_dis = _pattern_probability_for(u, inp, pattern, False)
    return overlap * p_ind + (1.0 - overlap) * p_dis


def hom_visibility_ideal(eta: float) -> float:
    """2 eta (1 - eta) / (1 - 2 eta + 2 eta^2)."""
    return 2 * eta * (1 - eta) / (1 - 2 * eta + 2 * eta**2)


# --- spectral overlap -------------------------------------------------------


@dataclass(frozen=True)
class OverlapModel:
    """Filtered-photon overlap versus path difference.

    ``gaussian``: exp(-(pi/2) (tau / l_c)^2). ``sinc2``: sinc^2(tau / l_c) with
    the normalized sinc, whose first zero sits at tau = l_c. ``delay_um`` is a
    fixed offset of the zero-delay point.
    """

    center_nm: float = 780.0
    bandwidth_nm: float = 3.0
    shape: str = "gaussian"
    delay_um: float = 0.0

    def __post_init__(self):
        if self.bandwidth_nm <= 0:
            raise ValueError("filter bandwidth must be positive")
        if self.center_nm <= 0:
            raise ValueError("center wavelength must be positive")
        if self.shape not in ("gaussian", "sinc2"):
            raise ValueError(f"unknown filter shape {self.shape!r}")

    @property
    def coherence_length_um(self) -> float:
        return self.center_nm**2 / self.bandwidth_nm * 1e-3


def overlap(model: OverlapModel, tau_um: float) -> float:
    if not math.isfinite(tau_um):
        raise ValueError("path difference must be finite")
    z = (tau_um - model.delay_um) / model.coherence_length_um
    if model.shape == "gaussian":
        return math.exp(-0.5 * math.pi * z * z)
    return float(np.sinc(z) ** 2)


# --- detectors ---------------------------------------------------------------


def cascade_click_probability(photons: int, tree: Sequence[float]) -> float:
    """P(each terminal detector of a splitter tree sees >= 1 photon).

    Photons pick branch i independently with probability ``tree[i]``;
    inclusion-exclusion over the set of dark branches.
    """
    tree = list(tree)
    if not tree:
        raise ValueError("cascade tree has no branches")
    if photons < 0:
        raise ValueError("photon number must be >= 0")
    k = len(tree)
    total = 0.0
    for r in range(k + 1):
        for dark in itertools.combinations(range(k), r):
            total += (-1) ** r * (1.0 - sum(tree[i] for i in dark)) ** photons
    return float(min(max(total, 0.0), 1.0))


def _check_tree(tree):
    if not tree:
        raise ValueError("cascade tree has no branches")
    if any(not 0.0 < p <= 1.0 for p in tree):
        raise ValueError(f"branch probabilities must lie in (0, 1]: {tree}")
    if abs(sum(tree) - 1.0) > 1e-12:
        raise ValueError(f"branch probabilities must sum to 1: {tree}")


@dataclass(frozen=True)
class DetectorModel:
    """Detectors on the output modes.

    ``efficiency`` is one number for all detectors or a per-mode mapping.
    ``cascades`` maps a mode to the terminal branch probabilities of a
    splitter tree in front of click detectors on that mode.
    """

    efficiency: float | Mapping[int, float] = 1.0
    number_resolving: bool = True
    cascades: Mapping[int, tuple] = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.efficiency, Mapping):
            eff = {int(k): float(v) for k, v in self.efficiency.items()}
            vals = eff.values()
            object.__setattr__(self, "efficiency", eff)
        else:
            vals = [float(self.efficiency)]
            object.__setattr__(self, "efficiency", float(self.efficiency))
        if any(not 0.0 <= e <= 1.0 for e in vals):
            raise ValueError("detector efficiency must lie in [0, 1]")
        cas = {int(k): tuple(float(p) for p in v) for k, v in dict(self.cascades).items()}
        for tree in cas.values():
            _check_tree(tree)
        object.__setattr__(self, "cascades", cas)

    def efficiency_of(self, mode: int) -> float:
        if isinstance(self.efficiency, dict):
            return self.efficiency.get(mode, 1.0)
        return self.efficiency


# default for registering three photons on one output: a 50:50 splitter with
# a second 50:50 splitter on one arm
TWO_LEVEL_TREE = (0.5, 0.25, 0.25)


def apply_efficiency(event_probability: float, pattern: DetectionPattern, model: DetectorModel) -> float:
    """Scale by prod(efficiency ** photons) over the monitored modes."""
    scale = math.prod(model.efficiency_of(m) ** n for m, n in pattern.counts.items())
    return event_probability * scale


def thinned_distribution(
    probabilities: Mapping[FockState, float] | FockVector, model: DetectorModel
) -> dict[tuple[int, ...], float]:
    """Photon-number distribution after independent per-photon loss on every mode."""
    if isinstance(probabilities, FockVector):
        probabilities = probabilities.probabilities()
    out: dict[tuple[int, ...], float] = {}
    for s, p in probabilities.items():
        occ = s.occupations if isinstance(s, FockState) else tuple(s)
        per_mode = []
        for m, n in enumerate(occ):
            e = model.efficiency_of(m)
            per_mode.append([(k, math.comb(n, k) * e**k * (1 - e) ** (n - k)) for k in range(n + 1)])
        for combo in itertools.product(*per_mode):
            w = p * math.prod(q for _, q in combo)
            if w > 0.0:
                key = tuple(k for k, _ in combo)
                out[key] = out.get(key, 0.0) + w
    return out


def _mode_event_probability(n: int, required: int, mode: int, model: DetectorModel) -> float:
    """P(the detectors on one mode register ``required`` given n arriving photons)."""
    if model.number_resolving:
        return 1.0 if n == required else 0.0
    tree = model.cascades.get(mode)
    if tree is None:
        if required > 1:
            raise ValueError(f"mode {mode}: click detector cannot register {required} photons without a cascade")
        return 1.0 if (n >= 1) == (required == 1) else 0.0
    if required == 0:
        return 1.0 if n == 0 else 0.0
    if required != len(tree):
        raise ValueError(f"mode {mode}: pattern needs {required} clicks but the cascade has {len(tree)} detectors")
    return cascade_click_probability(n, tree)


def detected_probability(
    state: FockVector,
    pattern: DetectionPattern,
    model: DetectorModel,
    loss: str = "efficiency",
) -> float:
    """Probability per trial that the detectors report ``pattern``.

    ``loss="efficiency"`` post-selects the exact Fock pattern and scales it by
    detector efficiency and the splitter-cascade success probability; valid
    for ideal fixed-photon-number inputs. ``loss="thinning"`` applies binomial
    loss to every output term before the click model, so higher photon-number
    terms can masquerade as the target event.
    """
    if loss == "efficiency":
        p = outcome_probability(state, pattern)
        p = apply_efficiency(p, pattern, model)
        if not model.number_resolving:
            for m, n in pattern.counts.items():
                if m in model.cascades and n > 0:
                    p *= _mode_event_probability(n, n, m, model)
        return p
    if loss != "thinning":
        raise ValueError(f"unknown loss model {loss!r}")
    total = 0.0
    for occ, p in thinned_distribution(state, model).items():
        q = p
        for m, req in pattern.counts.items():
            q *= _mode_event_probability(occ[m], req, m, model)
            if q == 0.0:
                break
        total += q
    return float(min(total, 1.0))


# --- counting ----------------------------------------------------------------


def point_rng(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for one sweep point, derived from (seed, index) only."""
    return np.random.default_rng([int(seed), int(index)])


def sample_counts(probability: float, trials_per_point: int, rng_seed) -> int:
    """Poisson count with mean ``probability * trials_per_point``.

    ``rng_seed`` is an int seed or a ``numpy.random.Generator``.
    """
    if trials_per_point < 0:
        raise ValueError("trials_per_point must be >= 0")
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {probability}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return int(rng.poisson(probability * trials_per_point))


@dataclass(frozen=True)
class SweepRecord:
    setting: float
    ideal_probability: float
    counts: int
    error: float


def make_record(setting: float, ideal_probability: float, counts: int) -> SweepRecord:
    return SweepRecord(float(setting), float(ideal_probability), int(counts), math.sqrt(counts))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_sweep_csv(records: Sequence[SweepRecord], metadata: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# schema-version: {SCHEMA_VERSION}\n")
    for k, v in (metadata or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in records:
        w.writerow([_fmt(r.setting), _fmt(r.ideal_probability), str(r.counts), _fmt(r.error)])
    return buf.getvalue()


def write_sweep_json(records: Sequence[SweepRecord], metadata: Mapping[str, object] | None = None) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "metadata": dict(metadata or {}),
        "columns": list(SWEEP_COLUMNS),
        "rows": [[r.setting, r.ideal_probability, r.counts, r.error] for r in records],
    }
    return json.dumps(doc, indent=1) + "\n"


def read_sweep_csv(text: str) -> tuple[list[SweepRecord], dict[str, str]]:
    """Parse a sweep CSV; returns the records and the metadata lines."""
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    version = meta.get("schema-version")
    if version is not None and int(version) != SCHEMA_VERSION:
        raise ValueError(f"unsupported sweep schema version {version}")
    reader = csv.reader(body)
    header = next(reader, None)
    if header is None or tuple(header) != SWEEP_COLUMNS:
        raise ValueError(f"expected columns {SWEEP_COLUMNS}, got {header}")
    records = [
        SweepRecord(float(s), float(p), int(c), float(e)) for s, p, c, e in reader
    ]
    return records, meta
