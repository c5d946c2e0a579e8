"""Execute scenarios, calibrations and contamination sweeps.

Per-point randomness comes from ``point_rng(seed, index)`` so the order in
which points are evaluated never changes the output bytes.
"""

from __future__ import annotations

import copy
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis as an
from .circuit import compose, effective_reflectivity, evolve, mz_interferometer
from .detection import (
    DetectionPattern,
    DetectorModel,
    TWO_LEVEL_TREE,
    apply_efficiency,
    detected_probability,
    distinguishable_mixture_probability,
    hom_visibility_ideal,
    make_record,
    outcome_probability,
    overlap,
    point_rng,
    sample_counts,
    write_sweep_csv,
    write_sweep_json,
)
from .fock import FockVector
from .lm import FitError
from .scenario import ConfigError, Scenario
from .source import SpdcSource, spdc_state

LAW_TOL = 1e-10
MODEL_SCHEMA = "phase-voltage-model"
RNG_NOTE = "numpy PCG64, default_rng([seed, point_index])"


def law_value(law: str, phase: float, scenario: Scenario | None = None, tau: float | None = None) -> float:
    """Closed-form ideal probability for the built-in experiments."""
    if law == "single_photon":
        return 0.5 * (1 - math.cos(phase))
    if law == "two_photon":
        return 0.5 * (1 + math.cos(2 * phase))
    if law == "four_photon_31":
        return 3 / 16 * (1 - math.cos(4 * phase))
    if law == "hom_zero_delay":
        # coincidences of indistinguishable photons at reflectivity sin^2(phi/2)
        return (1 - 2 * math.sin(phase / 2) ** 2) ** 2
    if law == "hom_dip":
        eta = effective_reflectivity(scenario.build_circuit(0.0))
        p_dis = 1 - 2 * eta + 2 * eta**2
        x = overlap(scenario.overlap_model(), tau)
        return p_dis * (1 - hom_visibility_ideal(eta) * x)
    raise ValueError(f"unknown law {law!r}")


def four_photon_combined_law(phase: float) -> float:
    """P(|3,1>) + P(|1,3>) for |2,2> through the MZ."""
    return 3 / 8 * (1 - math.cos(4 * phase))


def load_model(path: str | Path) -> an.PhaseVoltageModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != MODEL_SCHEMA:
        raise ConfigError("sweep.model", f"{path} is not a phase-voltage model file")
    return an.PhaseVoltageModel.from_record(doc["coefficients"])


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2) + "\n"


@dataclass
class ScenarioResult:
    scenario: Scenario
    records: list
    summary: dict
    extra_tables: dict[str, str] = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return bool(self.summary.get("valid", False))

    def metadata(self) -> dict:
        return {
            "scenario": self.scenario.name,
            "setting-kind": self.scenario.axis,
            "seed": self.scenario.seed,
            "trials": self.scenario.trials,
            "rng": RNG_NOTE,
        }

    def data_text(self, fmt: str = "csv") -> str:
        if fmt == "csv":
            return write_sweep_csv(self.records, self.metadata())
        if fmt == "json":
            return write_sweep_json(self.records, self.metadata())
        raise ValueError(f"unknown format {fmt!r}")

    def write(self, out_dir: str | Path, fmt: str = "csv") -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = self.scenario.name
        paths = []
        p = out / f"{name}.{fmt}"
        p.write_text(self.data_text(fmt))
        paths.append(p)
        p = out / f"{name}_summary.json"
        p.write_text(dumps(self.summary))
        paths.append(p)
        for suffix, text in self.extra_tables.items():
            p = out / f"{name}_{suffix}.csv"
            p.write_text(text)
            paths.append(p)
        return paths


def _input_state(s: Scenario) -> FockVector:
    src = s.build_input()
    if isinstance(src, SpdcSource):
        return spdc_state(src)
    return FockVector.basis(src)


def _phase_for(s: Scenario, setting: float, model) -> float:
    if s.axis == "voltage":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", an.ExtrapolationWarning)
            return float(an.phase_of_voltage(model, setting))
    return float(setting)


def run_scenario(s: Scenario, trials: int | None = None, seed: int | None = None) -> ScenarioResult:
    """Simulate every sweep point, sample counts and fit a summary.

    ``trials`` and ``seed`` override the scenario's values; the scenario
    passed in is left untouched.
    """
    s = copy.deepcopy(s)
    if trials is not None:
        s.trials = trials
    if seed is not None:
        s.seed = seed
    s.validate()
    axis = s.axis
    grid = s.grid()
    pattern = s.pattern()
    det = s.detector()
    loss = s.detection.get("loss", "efficiency")
    psi = _input_state(s)
    model = None
    if axis == "voltage":
        ref = s.sweep.get("model", "reference")
        model = an.REFERENCE_MODEL if ref == "reference" else load_model(ref)
    if axis in ("delay", "reflectivity"):
        if len(psi) != 1 or loss != "efficiency":
            raise ConfigError("input", "delay and reflectivity sweeps need a single Fock input and efficiency loss")
        occ = next(iter(psi.terms)).occupations

    records = []
    ideal = []
    phases = []
    vis_rows = []
    for i, x in enumerate(grid):
        rng = point_rng(s.seed, i)
        if axis in ("phase", "voltage"):
            phase = _phase_for(s, x, model)
            out = evolve(psi, s.build_circuit(phase))
            p_ideal = outcome_probability(out, pattern)
            p_det = detected_probability(out, pattern, det, loss)
            counts = sample_counts(p_det, s.trials, rng)
        elif axis == "delay":
            phase = float("nan")
            u = compose(s.build_circuit(0.0))
            p_ideal = distinguishable_mixture_probability(u, occ, pattern, overlap(s.overlap_model(), x))
            counts = sample_counts(apply_efficiency(p_ideal, pattern, det), s.trials, rng)
        else:
            phase = float(x)
            u = compose(s.build_circuit(phase))
            p_ideal, counts, vis = _dip_point(s, u, occ, pattern, det, rng)
            vis_rows.append((phase, effective_reflectivity(u), *vis))
        records.append(make_record(x, p_ideal, counts))
        ideal.append(p_ideal)
        phases.append(phase)

    summary: dict = {
        "schema_version": 1,
        "scenario": s.name,
        "axis": axis,
        "seed": s.seed,
        "trials": s.trials,
        "points": len(records),
    }
    checks: dict[str, bool] = {}
    if s.law is not None:
        if s.law == "hom_dip":
            expect = [law_value(s.law, 0.0, s, tau) for tau in grid]
        else:
            expect = [law_value(s.law, ph) for ph in phases]
        err = float(np.max(np.abs(np.array(ideal) - np.array(expect))))
        summary["law"] = {"name": s.law, "max_abs_error": err, "tolerance": LAW_TOL}
        checks["law"] = err <= LAW_TOL

    data = an.FringeData.from_records(records, "voltage" if axis == "voltage" else "phase")
    extra = {}
    try:
        if axis == "phase":
            summary["fit"], checks["fit"] = _summarize_fringe(s, data)
        elif axis == "voltage":
            summary["fit"], checks["fit"] = _summarize_calibration(s, data, model)
        elif axis == "delay":
            summary["fit"], checks["fit"] = _summarize_dip(s, records)
        else:
            summary["fit"], checks["fit"], extra["visibility"] = _summarize_visibility(vis_rows, s)
    except FitError as exc:
        summary["fit"] = {"error": str(exc)}
        checks["fit"] = False
    summary["checks"] = checks
    summary["valid"] = all(checks.values())
    return ScenarioResult(s, records, summary, extra)


def _dip_point(s, u, occ, pattern, det, rng):
    """Simulate one delay scan; returns zero-delay record data and the fitted visibility."""
    taus = s.dip_grid()
    om = s.overlap_model()
    p_ind = distinguishable_mixture_probability(u, occ, pattern, 1.0)
    p_dis = distinguishable_mixture_probability(u, occ, pattern, 0.0)
    probs = [overlap(om, t) * p_ind + (1 - overlap(om, t)) * p_dis for t in taus]
    counts = [sample_counts(apply_efficiency(p, pattern, det), s.trials, rng) for p in probs]
    v_ideal = (p_dis - p_ind) / p_dis if p_dis > 0 else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", an.FitWarning)
        try:
            fit = an.fit_dip(an.FringeData.poissonian(taus, counts, "delay"), om.shape)
            v_fit, v_err = fit.visibility, fit.visibility_error
        except FitError:
            v_fit, v_err = float("nan"), float("nan")
    i0 = int(np.argmin(np.abs(taus - om.delay_um)))
    return p_ind, counts[i0], (v_ideal, v_fit, v_err)


def _summarize_fringe(s, data):
    h = s.fit.get("harmonic", "auto")
    fit = an.select_harmonic(data) if h == "auto" else an.fit_fringe(data, int(h))
    rec = fit.to_record()
    c = min(max(fit.contrast, 0.0), 1.0)
    beats, margin = an.contrast_beats_sql(c)
    rec["beats_sql"] = beats
    rec["sql_margin"] = margin
    return rec, bool(np.isfinite(fit.contrast))


def _summarize_calibration(s, data, model):
    fit = an.fit_phase_voltage(data, harmonic=int(s.fit.get("harmonic", 2)), sign=int(s.fit.get("sign", 1)))
    rec = fit.to_record()
    v = data.settings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", an.ExtrapolationWarning)
        diff = fit.model(v) - model(v)
    per = fit.phase_modulo
    diff = (diff + per / 2) % per - per / 2
    rec["rms_phase_error_vs_generator"] = float(np.sqrt(np.mean(diff**2)))
    return rec, fit.converged


def _summarize_dip(s, records):
    taus = np.array([r.setting for r in records])
    data = an.FringeData.poissonian(taus, [r.counts for r in records], "delay")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", an.FitWarning)
        fit = an.fit_dip(data, s.overlap_model().shape)
    eta = effective_reflectivity(s.build_circuit(0.0))
    rec = fit.to_record()
    rec["reflectivity"] = eta
    rec["visibility_ideal"] = hom_visibility_ideal(eta)
    return rec, fit.converged


def _summarize_visibility(rows, s):
    import csv
    import io

    buf = io.StringIO()
    buf.write("# schema-version: 1\n")
    buf.write(f"# scenario: {s.name}\n# seed: {s.seed}\n# rng: {RNG_NOTE}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phase", "reflectivity", "visibility_ideal", "visibility_fit", "visibility_error"])
    max_law_err = 0.0
    pulls = []
    for phase, eta, v_ideal, v_fit, v_err in rows:
        w.writerow([repr(float(x)) for x in (phase, eta, v_ideal, v_fit, v_err)])
        max_law_err = max(max_law_err, abs(v_ideal - hom_visibility_ideal(math.sin(phase / 2) ** 2)))
        if np.isfinite(v_fit) and np.isfinite(v_err) and v_err > 0:
            pulls.append((v_fit - v_ideal) / v_err)
    rec = {
        "visibility_law_max_abs_error": max_law_err,
        "fitted_points": len(pulls),
        "rms_pull": float(np.sqrt(np.mean(np.square(pulls)))) if pulls else float("nan"),
    }
    return rec, max_law_err <= 1e-9, buf.getvalue()


# --- calibration -----------------------------------------------------------------


def run_calibration(
    raw: an.FringeData,
    one_photon: an.FringeData | None = None,
    one_photon_sign: int = -1,
) -> an.CalibrationFit:
    """Two-photon fit of phi(V), then the modulo-2 pi branch from one-photon data.

    Without one-photon data the result stays modulo pi and says so in its notes.
    """
    fit = an.fit_phase_voltage(raw, harmonic=2, sign=1)
    if one_photon is None:
        fit.notes.append("no single-photon data; phase known modulo pi only")
        return fit
    return an.resolve_branch(fit, one_photon, one_photon_sign)


def calibration_document(fit: an.CalibrationFit) -> dict:
    doc = {"schema_version": 1, "schema": MODEL_SCHEMA}
    doc.update(fit.to_record())
    return doc


def write_model_file(fit: an.CalibrationFit, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(dumps(calibration_document(fit)))
    return path


# --- contamination sweep --------------------------------------------------------------


def contamination_fringe(
    lam: float,
    detector: DetectorModel,
    pattern: DetectionPattern | None = None,
    n_max: int = 3,
    phases: Sequence[float] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Detected-event rate vs phase for an SPDC input, relative to the lowest contributing pair sector.

    Each pair sector |n, n> is evolved and detected separately (sectors do not
    interfere in photon counting) and weighted by lam^(2(n - n0)), where n0
    is the smallest sector able to produce the pattern. This keeps the limit
    lam -> 0 finite and equal to the ideal heralded input.
    """
    pattern = pattern or DetectionPattern.of(3, 1)
    phases = np.linspace(0, math.pi, 121) if phases is None else np.asarray(phases, dtype=float)
    src = SpdcSource(lam, n_max)
    n0 = math.ceil(pattern.photons / 2)
    if n0 > n_max:
        raise ValueError("truncation too small to produce the pattern")
    rates = np.zeros(phases.size)
    for n in range(n0, n_max + 1):
        weight = (src.profile(n) / src.profile(n0)) ** 2 * lam ** (2 * (n - n0))
        if weight == 0.0:
            continue
        psi = FockVector.basis((n, n))
        for i, ph in enumerate(phases):
            out = evolve(psi, mz_interferometer(ph))
            rates[i] += weight * detected_probability(out, pattern, detector, loss="thinning")
    return phases, rates


def run_contamination_sweep(
    lams: Sequence[float],
    detector: DetectorModel | None = None,
    n_max: int = 3,
    phase_points: int = 121,
) -> list[dict]:
    """Four-fold |3,1> fringe contrast (harmonic-4 fit) for each pair amplitude."""
    if detector is None:
        detector = DetectorModel(efficiency=0.6, number_resolving=False, cascades={0: TWO_LEVEL_TREE})
    rows = []
    phases = np.linspace(0, math.pi, phase_points)
    for lam in lams:
        if not 0.0 <= lam < 1.0:
            raise ValueError(f"pair amplitude must lie in [0, 1), got {lam}")
        _, rates = contamination_fringe(lam, detector, n_max=n_max, phases=phases)
        fit = an.fit_fringe(an.FringeData(phases, rates, np.ones_like(rates)), 4)
        rows.append({
            "lam": float(lam),
            "contrast": fit.contrast,
            "contrast_minmax": an.fringe_contrast(rates),
        })
    return rows


def contamination_table(rows: list[dict], efficiency, n_max: int) -> str:
    import csv
    import io

    buf = io.StringIO()
    buf.write("# schema-version: 1\n")
    buf.write(f"# efficiency: {efficiency}\n# n_max: {n_max}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lam", "contrast", "contrast_minmax"])
    for r in rows:
        w.writerow([repr(r["lam"]), repr(r["contrast"]), repr(r["contrast_minmax"])])
    return buf.getvalue()
