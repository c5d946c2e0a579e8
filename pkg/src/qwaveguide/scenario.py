"""Declarative experiment descriptions.

A scenario is one YAML document::

    schema_version: 1
    name: fig4b
    input: {kind: fock, occupations: [1, 1]}        # or {kind: spdc, lam: 0.2, n_max: 3}
    circuit:
      mode_count: 2
      elements:
        - {type: coupler, eta: 0.5, modes: [0, 1]}
        - {type: phase, phi: sweep, mode: 1}          # ``sweep`` marks the swept element
        - {type: coupler, eta: 0.5, modes: [0, 1]}
    sweep: {axis: phase, start: -3.14159, stop: 3.14159, points: 201}
    detection:
      pattern: {0: 1, 1: 1}
      efficiency: 0.6
      number_resolving: true
      cascades: {}                                    # mode -> branch probabilities
      loss: efficiency                                # or thinning
    fit: {harmonic: auto}                             # auto | 1 | 2 | 4, plus sign for voltage sweeps
    trials: 5000
    seed: 2009

Sweep axes: ``phase`` (radians on the swept element), ``voltage`` (volts,
converted with ``sweep.model``: ``reference`` or a model-file path),
``delay`` (micrometres of path difference, needs an ``overlap`` section) and
``reflectivity`` (phase of the swept element, with a delay scan per point
given by ``dip``). ``law`` optionally names the closed form that the ideal
probability column is checked against.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .circuit import Circuit, Coupler, PhaseShift
from .detection import DetectionPattern, DetectorModel, OverlapModel, TWO_LEVEL_TREE
from .source import SpdcSource

SCHEMA_VERSION = 1
AXES = ("phase", "voltage", "delay", "reflectivity")
LAWS = ("single_photon", "two_photon", "four_photon_31", "hom_zero_delay", "hom_dip")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ConfigError(where, "expected a mapping")
    if key not in d:
        raise ConfigError(f"{where}.{key}" if where else key, "missing")
    return d[key]


def _num(value, where: str) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(where, f"expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(where, "must be finite")
    return x


def _int(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ConfigError(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(where, f"must be >= {minimum}")
    return int(value)


@dataclass
class Scenario:
    name: str
    input: dict
    circuit: dict
    sweep: dict
    detection: dict
    trials: int = 10000
    seed: int = 0
    fit: dict = field(default_factory=lambda: {"harmonic": "auto"})
    overlap: dict | None = None
    dip: dict | None = None
    law: str | None = None
    description: str = ""

    def __post_init__(self):
        self.validate()

    # --- validation -------------------------------------------------------

    def validate(self):
        if not isinstance(self.name, str) or not self.name:
            raise ConfigError("name", "must be a non-empty string")
        self.trials = _int(self.trials, "trials", 0)
        self.seed = _int(self.seed, "seed", 0)
        self.build_input()
        self.build_circuit(0.0)
        grid = self.grid()
        if grid.size == 0:
            raise ConfigError("sweep", "grid is empty")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("sweep", "grid must be strictly increasing")
        self.pattern()
        self.detector()
        loss = self.detection.get("loss", "efficiency")
        if loss not in ("efficiency", "thinning"):
            raise ConfigError("detection.loss", f"must be 'efficiency' or 'thinning', got {loss!r}")
        if self.axis in ("delay", "reflectivity"):
            self.overlap_model()
        if self.axis == "reflectivity":
            if self.dip is None:
                raise ConfigError("dip", "reflectivity sweeps need a delay grid")
            self.dip_grid()
        if self.axis == "voltage":
            model = self.sweep.get("model", "reference")
            if not isinstance(model, str):
                raise ConfigError("sweep.model", "must be 'reference' or a file path")
        if self.law is not None and self.law not in LAWS:
            raise ConfigError("law", f"unknown law {self.law!r}; known: {', '.join(LAWS)}")
        h = self.fit.get("harmonic", "auto")
        if h != "auto" and h not in (1, 2, 4):
            raise ConfigError("fit.harmonic", "must be auto, 1, 2 or 4")
        if self.fit.get("sign", 1) not in (1, -1):
            raise ConfigError("fit.sign", "must be +1 or -1")

    @property
    def axis(self) -> str:
        axis = _req(self.sweep, "axis", "sweep")
        if axis not in AXES:
            raise ConfigError("sweep.axis", f"must be one of {', '.join(AXES)}")
        return axis

    def grid(self) -> np.ndarray:
        return _grid(self.sweep, "sweep")

    def dip_grid(self) -> np.ndarray:
        return _grid(self.dip, "dip")

    def build_input(self):
        kind = _req(self.input, "kind", "input")
        if kind == "fock":
            occ = _req(self.input, "occupations", "input")
            if not isinstance(occ, (list, tuple)) or not all(isinstance(n, int) and n >= 0 for n in occ):
                raise ConfigError("input.occupations", "expected a list of non-negative integers")
            return tuple(occ)
        if kind == "spdc":
            lam = _num(_req(self.input, "lam", "input"), "input.lam")
            n_max = _int(self.input.get("n_max", 3), "input.n_max", 1)
            try:
                return SpdcSource(lam, n_max)
            except ValueError as exc:
                raise ConfigError("input.lam", str(exc)) from None
        raise ConfigError("input.kind", f"must be 'fock' or 'spdc', got {kind!r}")

    def build_circuit(self, swept_value: float) -> Circuit:
        m = _int(_req(self.circuit, "mode_count", "circuit"), "circuit.mode_count", 1)
        els = _req(self.circuit, "elements", "circuit")
        if not isinstance(els, list):
            raise ConfigError("circuit.elements", "expected a list")
        built = []
        for i, el in enumerate(els):
            where = f"circuit.elements[{i}]"
            kind = _req(el, "type", where)
            try:
                if kind == "coupler":
                    eta = el.get("eta", 0.5)
                    eta = swept_value if eta == "sweep" else _num(eta, f"{where}.eta")
                    built.append(Coupler(eta, tuple(el.get("modes", (0, 1)))))
                elif kind == "phase":
                    phi = el.get("phi", 0.0)
                    phi = swept_value if phi == "sweep" else _num(phi, f"{where}.phi")
                    built.append(PhaseShift(phi, int(el.get("mode", 1))))
                else:
                    raise ConfigError(f"{where}.type", f"must be 'coupler' or 'phase', got {kind!r}")
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                raise ConfigError(where, str(exc)) from None
        try:
            circ = Circuit(m, built)
        except ValueError as exc:
            raise ConfigError("circuit", str(exc)) from None
        if isinstance(self.build_input(), tuple) and len(self.build_input()) != m:
            raise ConfigError("input.occupations", f"length must equal circuit.mode_count ({m})")
        return circ

    def pattern(self) -> DetectionPattern:
        pat = _req(self.detection, "pattern", "detection")
        if not isinstance(pat, dict) or not pat:
            raise ConfigError("detection.pattern", "expected a non-empty mapping mode -> photon count")
        try:
            return DetectionPattern({int(k): int(v) for k, v in pat.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError("detection.pattern", str(exc)) from None

    def detector(self) -> DetectorModel:
        d = self.detection
        eff = d.get("efficiency", 1.0)
        cascades = d.get("cascades") or {}
        try:
            return DetectorModel(
                efficiency=eff if isinstance(eff, dict) else _num(eff, "detection.efficiency"),
                number_resolving=bool(d.get("number_resolving", True)),
                cascades={int(k): tuple(v) for k, v in cascades.items()},
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError("detection", str(exc)) from None

    def overlap_model(self) -> OverlapModel:
        if self.overlap is None:
            raise ConfigError("overlap", f"{self.axis} sweeps need an overlap section")
        o = self.overlap
        try:
            return OverlapModel(
                center_nm=_num(o.get("center_nm", 780.0), "overlap.center_nm"),
                bandwidth_nm=_num(o.get("bandwidth_nm", 3.0), "overlap.bandwidth_nm"),
                shape=o.get("shape", "gaussian"),
                delay_um=_num(o.get("delay_um", 0.0), "overlap.delay_um"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("overlap", str(exc)) from None

    # --- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "name": self.name}
        if self.description:
            d["description"] = self.description
        d.update(
            input=copy.deepcopy(self.input),
            circuit=copy.deepcopy(self.circuit),
            sweep=copy.deepcopy(self.sweep),
            detection=copy.deepcopy(self.detection),
            fit=copy.deepcopy(self.fit),
            trials=self.trials,
            seed=self.seed,
        )
        for key in ("overlap", "dip", "law"):
            val = getattr(self, key)
            if val is not None:
                d[key] = copy.deepcopy(val)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ConfigError("", "scenario must be a mapping")
        d = dict(d)
        version = d.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"unsupported version {version}")
        known = {"name", "description", "input", "circuit", "sweep", "detection", "fit",
                 "trials", "seed", "overlap", "dip", "law"}
        extra = set(d) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown field")
        for key in ("name", "input", "circuit", "sweep", "detection"):
            if key not in d:
                raise ConfigError(key, "missing")
        return cls(**d)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def from_yaml(cls, text: str) -> "Scenario":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError("", f"not valid YAML: {exc}") from None
        return cls.from_dict(data)


def _grid(spec: dict, where: str) -> np.ndarray:
    if not isinstance(spec, dict):
        raise ConfigError(where, "expected a mapping")
    if "values" in spec:
        vals = spec["values"]
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"{where}.values", "expected a non-empty list")
        return np.array([_num(v, f"{where}.values") for v in vals])
    start = _num(_req(spec, "start", where), f"{where}.start")
    stop = _num(_req(spec, "stop", where), f"{where}.stop")
    points = _int(_req(spec, "points", where), f"{where}.points", 1)
    return np.linspace(start, stop, points)


# --- built-in scenarios ----------------------------------------------------------------

_MZ = {
    "mode_count": 2,
    "elements": [
        {"type": "coupler", "eta": 0.5, "modes": [0, 1]},
        {"type": "phase", "phi": "sweep", "mode": 1},
        {"type": "coupler", "eta": 0.5, "modes": [0, 1]},
    ],
}


def _mz_fixed(phi: float) -> dict:
    c = copy.deepcopy(_MZ)
    c["elements"][1]["phi"] = phi
    return c


_PI = round(math.pi, 12)
_COUPLING = 0.6  # overall device coupling efficiency per photon

_BUILTINS: dict[str, dict] = {
    "fig3": {
        "description": "two-photon coincidences vs heater voltage (phase calibration data)",
        "input": {"kind": "fock", "occupations": [1, 1]},
        "circuit": _MZ,
        "sweep": {"axis": "voltage", "start": 0.0, "stop": 5.0, "points": 50, "model": "reference"},
        "detection": {"pattern": {0: 1, 1: 1}, "efficiency": _COUPLING},
        "fit": {"harmonic": 2, "sign": 1},
        # peak mean about 2000 coincidences
        "trials": 5556,
        "law": "two_photon",
    },
    "fig3-single": {
        "description": "single-photon counts at output 0 vs heater voltage (branch disambiguation)",
        "input": {"kind": "fock", "occupations": [1, 0]},
        "circuit": _MZ,
        "sweep": {"axis": "voltage", "start": 0.0, "stop": 5.0, "points": 50, "model": "reference"},
        "detection": {"pattern": {0: 1}, "efficiency": _COUPLING},
        "fit": {"harmonic": 1, "sign": -1},
        "trials": 3334,
        "law": "single_photon",
    },
    "fig4a": {
        "description": "single-photon fringe at output 0, period 2 pi",
        "input": {"kind": "fock", "occupations": [1, 0]},
        "circuit": _MZ,
        "sweep": {"axis": "phase", "start": -_PI, "stop": _PI, "points": 201},
        "detection": {"pattern": {0: 1}, "efficiency": _COUPLING},
        "fit": {"harmonic": "auto"},
        "trials": 5000,
        "law": "single_photon",
    },
    "fig4b": {
        "description": "two-photon coincidence fringe, period pi",
        "input": {"kind": "fock", "occupations": [1, 1]},
        "circuit": _MZ,
        "sweep": {"axis": "phase", "start": -_PI, "stop": _PI, "points": 201},
        "detection": {"pattern": {0: 1, 1: 1}, "efficiency": _COUPLING},
        "fit": {"harmonic": "auto"},
        "trials": 5000,
        "law": "two_photon",
    },
    "fig4c": {
        "description": "four-photon |3,1> fringe from |2,2>, three cascaded click detectors on output 0",
        "input": {"kind": "fock", "occupations": [2, 2]},
        "circuit": _MZ,
        "sweep": {"axis": "phase", "start": -_PI, "stop": _PI, "points": 201},
        "detection": {
            "pattern": {0: 3, 1: 1},
            "efficiency": _COUPLING,
            "number_resolving": False,
            "cascades": {0: list(TWO_LEVEL_TREE)},
            "loss": "efficiency",
        },
        "fit": {"harmonic": "auto"},
        "trials": 200000,
        "law": "four_photon_31",
    },
    "fig5": {
        "description": "HOM visibility vs MZ phase (variable reflectivity), one delay scan per phase",
        "input": {"kind": "fock", "occupations": [1, 1]},
        "circuit": _MZ,
        "sweep": {"axis": "reflectivity", "start": -3.0, "stop": -0.2, "points": 15},
        "dip": {"start": -600.0, "stop": 600.0, "points": 41},
        "overlap": {"center_nm": 780.0, "bandwidth_nm": 3.0, "shape": "gaussian"},
        "detection": {"pattern": {0: 1, 1: 1}, "efficiency": _COUPLING},
        "trials": 20000,
        "law": "hom_zero_delay",
    },
    "fig5-dip": {
        "description": "HOM dip vs path difference at phi = -0.49 rad",
        "input": {"kind": "fock", "occupations": [1, 1]},
        "circuit": _mz_fixed(-0.49),
        "sweep": {"axis": "delay", "start": -600.0, "stop": 600.0, "points": 61},
        "overlap": {"center_nm": 780.0, "bandwidth_nm": 3.0, "shape": "gaussian"},
        "detection": {"pattern": {0: 1, 1: 1}, "efficiency": _COUPLING},
        "trials": 50000,
        "law": "hom_dip",
    },
    "figS4": {
        "description": "four-photon |3,1> fringe at high pump power (multi-pair contamination)",
        "input": {"kind": "spdc", "lam": 0.2, "n_max": 3},
        "circuit": _MZ,
        "sweep": {"axis": "phase", "start": 0.0, "stop": _PI, "points": 121},
        "detection": {
            "pattern": {0: 3, 1: 1},
            "efficiency": _COUPLING,
            "number_resolving": False,
            "cascades": {0: list(TWO_LEVEL_TREE)},
            "loss": "thinning",
        },
        "fit": {"harmonic": 4},
        "trials": 10000000,
    },
}

DEFAULT_SEED = 2009


def builtin_names() -> list[str]:
    return list(_BUILTINS)


def builtin(name: str) -> Scenario:
    if name not in _BUILTINS:
        raise KeyError(f"unknown built-in scenario {name!r}; choose from {', '.join(_BUILTINS)}")
    d = copy.deepcopy(_BUILTINS[name])
    d.setdefault("seed", DEFAULT_SEED)
    return Scenario(name=name, **d)
