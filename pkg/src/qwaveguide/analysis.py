"""Calibration and fringe analysis.

Two figures of merit are kept apart on purpose:

* fringe contrast ``C = (max - min) / (max + min)`` of a fitted sinusoid;
* HOM dip visibility ``V = (N_max - N_min) / N_max`` of a fitted dip.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .detection import SweepRecord, read_sweep_csv
from .lm import FitError, LMResult, levenberg_marquardt

CALIBRATED_RANGE = (0.0, 5.0)
SQL_THRESHOLD = 1.0 / math.sqrt(2.0)
HARMONICS = (1, 2, 4)


class ExtrapolationWarning(UserWarning):
    pass


class FitWarning(UserWarning):
    pass


# --- phase-voltage model ----------------------------------------------------


@dataclass(frozen=True)
class PhaseVoltageModel:
    """phi(V) = alpha + beta V^2 + gamma V^3 + delta V^4 (radians, volts)."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    uncertainties: tuple[float, float, float, float] | None = None

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def __call__(self, volts):
        return phase_of_voltage(self, volts)

    def to_record(self) -> dict:
        rec = {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta}
        if self.uncertainties is not None:
            rec["uncertainties"] = dict(zip(("alpha", "beta", "gamma", "delta"), self.uncertainties))
        return rec

    @classmethod
    def from_record(cls, rec) -> "PhaseVoltageModel":
        unc = rec.get("uncertainties")
        if unc is not None:
            unc = tuple(float(unc[k]) for k in ("alpha", "beta", "gamma", "delta"))
        return cls(float(rec["alpha"]), float(rec["beta"]), float(rec["gamma"]), float(rec["delta"]), unc)


# heater calibration reported for the fabricated device
REFERENCE_MODEL = PhaseVoltageModel(-1.887, 0.157, 0.0045, -0.001, (0.006, 0.005, 0.002, 0.0002))


def _poly(coeffs, v):
    a, b, g, d = coeffs
    v2 = v * v
    return a + b * v2 + g * v2 * v + d * v2 * v2


def phase_of_voltage(model: PhaseVoltageModel, volts):
    """Evaluate the model; warns outside the calibrated 0-5 V range."""
    v = np.asarray(volts, dtype=float)
    lo, hi = CALIBRATED_RANGE
    if np.any(v < lo) or np.any(v > hi):
        warnings.warn(f"voltage outside calibrated range [{lo}, {hi}] V", ExtrapolationWarning, stacklevel=2)
    out = _poly(model.coefficients, v)
    return float(out) if out.ndim == 0 else out


# --- data containers ---------------------------------------------------------


@dataclass
class FringeData:
    settings: np.ndarray
    counts: np.ndarray
    errors: np.ndarray
    setting_kind: str = "phase"

    def __post_init__(self):
        self.settings = np.asarray(self.settings, dtype=float)
        self.counts = np.asarray(self.counts, dtype=float)
        if self.errors is None:
            self.errors = np.sqrt(self.counts)
        self.errors = np.asarray(self.errors, dtype=float)
        if not (self.settings.shape == self.counts.shape == self.errors.shape):
            raise ValueError("settings, counts and errors must have equal length")
        if np.any(self.counts < 0):
            raise ValueError("counts must be >= 0")

    def __len__(self):
        return self.settings.size

    @classmethod
    def poissonian(cls, settings, counts, setting_kind: str = "phase") -> "FringeData":
        counts = np.asarray(counts, dtype=float)
        return cls(settings, counts, np.sqrt(counts), setting_kind)

    @classmethod
    def from_records(cls, records: Sequence[SweepRecord], setting_kind: str = "phase") -> "FringeData":
        return cls(
            [r.setting for r in records],
            [r.counts for r in records],
            [r.error for r in records],
            setting_kind,
        )

    @classmethod
    def from_csv(cls, text: str, setting_kind: str | None = None) -> "FringeData":
        records, meta = read_sweep_csv(text)
        return cls.from_records(records, setting_kind or meta.get("setting-kind", "phase"))

    def sigma(self) -> np.ndarray:
        """Per-point standard deviations; zero-count points get sigma = 1."""
        s = self.errors.copy()
        s[s <= 0] = 1.0
        return s


# --- fringe fitting ----------------------------------------------------------


@dataclass
class FringeFit:
    """counts ~ amplitude * (1 + contrast * cos(harmonic * phi + phase_offset))."""

    amplitude: float
    contrast: float
    phase_offset: float
    harmonic: int
    chi2: float
    dof: int
    contrast_error: float = float("nan")
    amplitude_error: float = float("nan")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.harmonic

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else float("nan")

    def model(self, phi):
        return self.amplitude * (1 + self.contrast * np.cos(self.harmonic * np.asarray(phi) + self.phase_offset))

    def to_record(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "amplitude_error": self.amplitude_error,
            "contrast": self.contrast,
            "contrast_error": self.contrast_error,
            "phase_offset": self.phase_offset,
            "harmonic": self.harmonic,
            "period": self.period,
            "chi2": self.chi2,
            "dof": self.dof,
        }


def _check_span(settings, period):
    s = np.sort(settings)
    step = np.median(np.diff(s)) if s.size > 1 else 0.0
    if s.size < 4 or (s[-1] - s[0]) + step < period * (1 - 1e-9):
        raise FitError(f"settings span less than one fringe period ({period:.4g})")


def fit_fringe(data: FringeData, harmonic: int) -> FringeFit:
    """Weighted least-squares sinusoid at a fixed harmonic of the phase.

    Written as a + b cos(k phi) + c sin(k phi) the model is linear, so the fit
    is a single weighted linear solve; amplitude, contrast and offset follow
    from (a, b, c), and their errors by linear propagation.
    """
    if harmonic not in HARMONICS:
        raise ValueError(f"harmonic must be one of {HARMONICS}, got {harmonic}")
    _check_span(data.settings, 2 * math.pi / harmonic)
    x = harmonic * data.settings
    w = 1.0 / data.sigma()
    X = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])
    Xw = X * w[:, None]
    yw = data.counts * w
    coef, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    a, b, c = coef
    if a <= 0:
        raise FitError("fitted mean count is not positive")
    resid = yw - Xw @ coef
    chi2 = float(resid @ resid)
    cov = np.linalg.pinv(Xw.T @ Xw)
    r = math.hypot(b, c)
    contrast = r / a
    # d(contrast)/d(a, b, c)
    if r > 0:
        grad = np.array([-r / a**2, b / (a * r), c / (a * r)])
        c_err = math.sqrt(max(grad @ cov @ grad, 0.0))
    else:
        c_err = math.sqrt(cov[1, 1] + cov[2, 2]) / a
    return FringeFit(
        amplitude=float(a),
        contrast=float(contrast),
        phase_offset=float(math.atan2(-c, b)),
        harmonic=harmonic,
        chi2=chi2,
        dof=len(data) - 3,
        contrast_error=float(c_err),
        amplitude_error=float(math.sqrt(cov[0, 0])),
    )


def select_harmonic(data: FringeData, candidates: Sequence[int] = HARMONICS) -> FringeFit:
    """Fit each candidate harmonic and keep the lowest chi^2."""
    fits = []
    for k in candidates:
        try:
            fits.append(fit_fringe(data, k))
        except FitError:
            continue
    if not fits:
        raise FitError("no candidate harmonic could be fitted")
    return min(fits, key=lambda f: f.chi2)


def fringe_contrast(values) -> float:
    """(max - min) / (max + min) of a sampled curve."""
    v = np.asarray(values, dtype=float)
    hi, lo = v.max(), v.min()
    return float((hi - lo) / (hi + lo)) if hi + lo > 0 else 0.0


# --- phase-voltage calibration ----------------------------------------------


@dataclass
class CalibrationFit:
    model: PhaseVoltageModel
    fringe: FringeFit
    iterations: int
    converged: bool
    message: str
    harmonic: int
    # phi(V) is only determined up to multiples of this
    phase_modulo: float = 2 * math.pi
    notes: list[str] = field(default_factory=list)

    @property
    def branch_resolved(self) -> bool:
        return self.phase_modulo >= 2 * math.pi - 1e-12

    @property
    def reduced_chi2(self) -> float:
        return self.fringe.reduced_chi2

    def to_record(self) -> dict:
        return {
            "coefficients": self.model.to_record(),
            "contrast": self.fringe.contrast,
            "contrast_error": self.fringe.contrast_error,
            "amplitude": self.fringe.amplitude,
            "harmonic": self.harmonic,
            "chi2": self.fringe.chi2,
            "dof": self.fringe.dof,
            "reduced_chi2": self.reduced_chi2,
            "iterations": self.iterations,
            "converged": self.converged,
            "message": self.message,
            "phase_modulo": self.phase_modulo,
            "branch_resolved": self.branch_resolved,
            "notes": list(self.notes),
        }


def _sinusoid_parts(v, coeffs, k):
    phase = k * _poly(coeffs, v)
    return np.cos(phase), np.sin(phase)


def _coarse_beta_scan(v, y, w, k, sign):
    """Grid over beta (gamma = delta = 0); each grid point is a linear fit."""
    vmax = float(np.max(np.abs(v)))
    dv = float(np.median(np.diff(np.sort(v))))
    # keep the local fringe frequency below the sampling Nyquist limit
    beta_max = math.pi / (2 * k * vmax * dv)
    dbeta = 0.05 / (k * vmax * vmax)
    betas = np.arange(dbeta, beta_max, dbeta)
    cands = []
    ones = np.ones_like(v)
    for beta in betas:
        x = k * beta * v * v
        X = np.column_stack([ones, np.cos(x), np.sin(x)]) * w[:, None]
        coef, *_ = np.linalg.lstsq(X, y * w, rcond=None)
        res = y * w - X @ coef
        cands.append((float(res @ res), beta, coef))
    cands.sort(key=lambda t: t[0])
    starts = []
    for chi2, beta, (a, b, c) in cands[:8]:
        if a <= 0:
            continue
        contrast = min(math.hypot(b, c) / a, 0.999)
        # a + b cos x + c sin x = a (1 + s C cos(x + k alpha))
        k_alpha = math.atan2(-c * sign, b * sign)
        starts.append(np.array([a, contrast, k_alpha / k, beta, 0.0, 0.0]))
    return starts


def fit_phase_voltage(
    data: FringeData,
    harmonic: int = 2,
    sign: int = 1,
    max_iter: int = 200,
) -> CalibrationFit:
    """Fit counts(V) = A (1 + sign * C cos(harmonic * phi(V))) for phi(V).

    ``sign=+1`` is the two-photon coincidence fringe (maximal at phi = 0);
    ``sign=-1`` is a single-photon count on the crossing output. Intensity
    fringes are even in phi, so phi(V) is reported on the branch with
    beta > 0, and alpha only modulo 2 pi / harmonic (reduced to the interval
    centred on zero). Starting points come from a coarse beta scan with
    gamma = delta = 0; the best few are refined with damped Gauss-Newton.
    """
    if data.setting_kind not in ("voltage",):
        raise ValueError(f"calibration needs voltage-swept data, got {data.setting_kind!r}")
    if harmonic not in HARMONICS:
        raise ValueError(f"harmonic must be one of {HARMONICS}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    v, y = data.settings, data.counts
    if len(data) < 12:
        raise FitError("calibration needs at least 12 points")
    if np.ptp(y) == 0:
        raise FitError("counts are constant; no fringe to fit")
    w = 1.0 / data.sigma()

    def resid(p):
        A, C = p[0], p[1]
        cos_t, _ = _sinusoid_parts(v, p[2:], harmonic)
        return (y - A * (1 + sign * C * cos_t)) * w

    def jac(p):
        A, C = p[0], p[1]
        cos_t, sin_t = _sinusoid_parts(v, p[2:], harmonic)
        d_phase = -A * sign * C * harmonic * sin_t  # d(model)/d(phi)
        cols = [
            1 + sign * C * cos_t,
            A * sign * cos_t,
            d_phase,
            d_phase * v**2,
            d_phase * v**3,
            d_phase * v**4,
        ]
        return -np.column_stack(cols) * w[:, None]

    best: LMResult | None = None
    for p0 in _coarse_beta_scan(v, y, w, harmonic, sign):
        res = levenberg_marquardt(resid, jac, p0, max_iter=max_iter)
        if best is None or res.chi2 < best.chi2 - 1e-9 * max(best.chi2, 1.0):
            best = res
    if best is None:
        raise FitError("no usable starting point found")
    p = best.params.copy()
    notes = []
    if p[1] < 0:
        # negative contrast is the same fringe shifted by half a period
        p[1] = -p[1]
        p[2] += math.pi / harmonic
    if p[3] < 0:
        p[2:] = -p[2:]
        notes.append("reported the beta > 0 branch of the even fringe")
    period = 2 * math.pi / harmonic
    p[2] = (p[2] + period / 2) % period - period / 2
    unc = best.uncertainties
    model = PhaseVoltageModel(*map(float, p[2:]), uncertainties=tuple(map(float, unc[2:])))
    fringe = FringeFit(
        amplitude=float(p[0]),
        contrast=float(p[1]),
        phase_offset=0.0,
        harmonic=harmonic,
        chi2=best.chi2,
        dof=best.dof,
        contrast_error=float(unc[1]),
        amplitude_error=float(unc[0]),
    )
    if not best.converged:
        warnings.warn(f"phase-voltage fit did not converge: {best.message}", FitWarning, stacklevel=2)
    return CalibrationFit(
        model, fringe, best.iterations, best.converged, best.message, harmonic,
        phase_modulo=period, notes=notes,
    )


def _branch_chi2(model_coeffs, data: FringeData, sign: int) -> float:
    """chi^2 of counts = a + b cos(phi(V)) with sign(b) constrained to ``sign``."""
    w = 1.0 / data.sigma()
    cos_t = np.cos(_poly(model_coeffs, data.settings))
    X = np.column_stack([np.ones_like(cos_t), cos_t]) * w[:, None]
    yw = data.counts * w
    coef, *_ = np.linalg.lstsq(X, yw, rcond=None)
    if coef[1] * sign < 0:
        coef = np.array([np.sum(yw * w) / np.sum(w * w), 0.0])
    r = yw - X @ coef
    return float(r @ r)


def resolve_branch(
    fit: CalibrationFit,
    one_photon: FringeData,
    one_photon_sign: int = -1,
    min_delta_chi2: float = 9.0,
) -> CalibrationFit:
    """Pick alpha modulo 2 pi using a single-photon fringe.

    Candidate offsets alpha + j * phase_modulo are compared by the chi^2 of
    the single-photon counts with the fringe sign fixed (``-1`` for the output
    whose count vanishes at phi = 0). If the best two candidates differ by
    less than ``min_delta_chi2`` the default branch is kept and flagged.
    """
    base = fit.model
    n_branches = max(1, round(2 * math.pi / fit.phase_modulo))
    scores = []
    for j in range(n_branches):
        coeffs = (base.alpha + j * fit.phase_modulo, base.beta, base.gamma, base.delta)
        scores.append((_branch_chi2(coeffs, one_photon, one_photon_sign), j, coeffs))
    scores.sort(key=lambda t: t[0])
    notes = list(fit.notes)
    resolved = True
    chosen = scores[0]
    if len(scores) > 1 and scores[1][0] - scores[0][0] < min_delta_chi2:
        resolved = False
        chosen = next(s for s in scores if s[1] == 0)
        notes.append("single-photon data did not separate the branches; kept the default branch")
    alpha = (chosen[2][0] + math.pi) % (2 * math.pi) - math.pi
    model = PhaseVoltageModel(alpha, base.beta, base.gamma, base.delta, base.uncertainties)
    return CalibrationFit(
        model, fit.fringe, fit.iterations, fit.converged, fit.message, fit.harmonic,
        phase_modulo=2 * math.pi if resolved else fit.phase_modulo, notes=notes,
    )


# --- HOM dip ------------------------------------------------------------------


@dataclass
class DipFit:
    baseline: float
    visibility: float
    center: float
    width: float
    visibility_error: float
    chi2: float
    dof: int
    converged: bool
    resolved: bool

    def to_record(self) -> dict:
        return dict(self.__dict__)


def _dip_shape(z, shape):
    if shape == "gaussian":
        return np.exp(-0.5 * math.pi * z * z)
    if shape == "sinc2":
        return np.sinc(z) ** 2
    raise ValueError(f"unknown dip shape {shape!r}")


def _dip_shape_deriv(z, shape):
    if shape == "gaussian":
        return -math.pi * z * np.exp(-0.5 * math.pi * z * z)
    s = np.sinc(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        ds = np.where(z == 0, 0.0, (np.cos(math.pi * z) - s) / z)
    return 2 * s * ds


def fit_dip(data: FringeData, shape: str = "gaussian", max_iter: int = 200) -> DipFit:
    """Fit counts(tau) = B (1 - V f((tau - tau0) / w)) to a delay scan."""
    t, y = data.settings, data.counts
    if len(data) < 5:
        raise FitError("dip fit needs at least 5 points")
    sig = data.sigma()
    i_min = int(np.argmin(y))
    tau0 = float(t[i_min])
    far = np.argsort(np.abs(t - tau0))[-max(2, len(t) // 5):]
    base = float(np.mean(y[far]))
    depth = base - float(y[i_min])
    noise = float(np.mean(sig[far])) / math.sqrt(len(far))
    if base <= 0:
        raise FitError("baseline counts are not positive")
    if depth <= max(3 * noise, 1e-12 * base):
        warnings.warn("dip not distinguishable from baseline", FitWarning, stacklevel=2)
        return DipFit(base, 0.0, tau0, float("nan"), float("nan"), float("nan"), len(data) - 4, True, False)
    half = base - depth / 2
    below = t[y < half]
    width = float(np.ptp(below)) if below.size > 1 else float(np.median(np.diff(np.sort(t))))
    width = max(width, 1e-9)
    w = 1.0 / sig

    def resid(p):
        B, V, c, s = p
        return (y - B * (1 - V * _dip_shape((t - c) / s, shape))) * w

    def jac(p):
        B, V, c, s = p
        z = (t - c) / s
        f = _dip_shape(z, shape)
        df = _dip_shape_deriv(z, shape)
        cols = [1 - V * f, -B * f, B * V * df / s, B * V * df * z / s]
        return -np.column_stack(cols) * w[:, None]

    res = levenberg_marquardt(resid, jac, [base, depth / base, tau0, width], max_iter=max_iter)
    B, V, c, s = res.params
    v_err = float(res.uncertainties[1])
    resolved = V > 3 * v_err if np.isfinite(v_err) else V > 0
    if not resolved:
        warnings.warn("fitted dip depth is not significant", FitWarning, stacklevel=2)
    return DipFit(float(B), float(V), float(c), float(abs(s)), v_err, res.chi2, res.dof, res.converged, bool(resolved))


def hom_visibility(dip_counts: FringeData, shape: str = "gaussian") -> float:
    """V = (N_max - N_min) / N_max from the fitted baseline and dip floor."""
    return fit_dip(dip_counts, shape).visibility


# --- metrology figures of merit ---------------------------------------------------


def contrast_beats_sql(contrast: float, photon_number: int = 2) -> tuple[bool, float]:
    """Whether a fringe contrast exceeds 1/sqrt(2); returns (verdict, margin).

    The threshold does not depend on ``photon_number``; it is accepted so
    call sites can state which fringe they test.
    """
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must lie in [0, 1]")
    margin = contrast - SQL_THRESHOLD
    return margin > 0, margin


def average_fidelity(contrast: float, points: int = 2001) -> float:
    """Mean of |<ideal(phi)|measured(phi)>|^2 over phi in [-pi/2, pi/2].

    ideal(phi) = cos(phi/2)|0> + i sin(phi/2)|1>. The measured state is taken
    pure, with the same relative phase as the ideal one and with populations
    from the contrast-C fringe, P1 = (1 - C cos phi) / 2. Both are real
    rotations, so the overlap is cos of the half-angle difference and the
    infidelity sin^2 of it. Trapezoid rule on ``points`` equally spaced
    phases.
    """
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must lie in [0, 1]")
    phi = np.linspace(-math.pi / 2, math.pi / 2, points)
    half_ideal = np.abs(phi) / 2
    half_meas = np.arccos(np.clip(contrast * np.cos(phi), -1.0, 1.0)) / 2
    infidelity = np.sin(half_ideal - half_meas) ** 2
    return float(1.0 - np.trapezoid(infidelity, phi) / math.pi)
