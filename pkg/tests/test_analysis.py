import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwaveguide import oracles
from qwaveguide.analysis import (
    REFERENCE_MODEL,
    SQL_THRESHOLD,
    ExtrapolationWarning,
    FitWarning,
    FringeData,
    PhaseVoltageModel,
    average_fidelity,
    contrast_beats_sql,
    fit_dip,
    fit_fringe,
    fit_phase_voltage,
    fringe_contrast,
    hom_visibility,
    phase_of_voltage,
    resolve_branch,
    select_harmonic,
)
from qwaveguide.lm import FitError


def fringe(contrast, k, mean, seed, points=201, offset=0.0):
    phi = np.linspace(-math.pi, math.pi, points)
    lam = mean * (1 + contrast * np.cos(k * phi + offset))
    counts = np.random.default_rng(seed).poisson(lam)
    return FringeData.poissonian(phi, counts)


def voltage_data(model, sign, k, peak, seed, points=50):
    v = np.linspace(0, 5, points)
    lam = peak / 2 * (1 + sign * np.cos(k * model(v)))
    return FringeData.poissonian(v, np.random.default_rng(seed).poisson(lam), "voltage")


# --- phase-voltage model -----------------------------------------------------


def test_reference_model_monotone_on_calibrated_range():
    v = np.linspace(0, 5, 1001)
    assert np.all(np.diff(REFERENCE_MODEL(v)) > 0)


def test_extrapolation_warns():
    with pytest.warns(ExtrapolationWarning):
        phase_of_voltage(REFERENCE_MODEL, 6.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        phase_of_voltage(REFERENCE_MODEL, 2.5)


def test_model_record_round_trip():
    assert PhaseVoltageModel.from_record(REFERENCE_MODEL.to_record()) == REFERENCE_MODEL


# --- fringe fits -------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2, 4])
def test_noiseless_fit_exact(k):
    phi = np.linspace(-math.pi, math.pi, 201)
    y = 500 * (1 + 0.9 * np.cos(k * phi + 0.3))
    fit = fit_fringe(FringeData(phi, y, np.ones_like(y)), k)
    assert fit.contrast == pytest.approx(0.9, abs=1e-12)
    assert fit.phase_offset == pytest.approx(0.3, abs=1e-12)
    assert fit.period == pytest.approx(2 * math.pi / k)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([1, 2, 4]), st.floats(0.3, 1.0), st.integers(0, 10**6))
def test_select_harmonic_finds_period(k, c, seed):
    assert select_harmonic(fringe(c, k, 2000, seed)).harmonic == k


def test_contrast_error_is_calibrated():
    pulls = []
    for seed in range(200):
        fit = fit_fringe(fringe(0.9, 2, 300, seed), 2)
        pulls.append((fit.contrast - 0.9) / fit.contrast_error)
    assert np.std(pulls) == pytest.approx(1.0, abs=0.15)


def test_short_span_and_bad_harmonic():
    phi = np.linspace(0, 1, 20)
    data = FringeData.poissonian(phi, np.full(20, 10))
    with pytest.raises(FitError):
        fit_fringe(data, 1)
    with pytest.raises(ValueError):
        fit_fringe(data, 3)


def test_minmax_contrast():
    assert fringe_contrast([1, 3]) == pytest.approx(0.5)


# --- calibration -------------------------------------------------------------


def test_calibration_noiseless_exact():
    v = np.linspace(0, 5, 50)
    y = 1000 * (1 + np.cos(2 * REFERENCE_MODEL(v)))
    fit = fit_phase_voltage(FringeData(v, y, np.ones_like(y), "voltage"))
    got = np.array(fit.model.coefficients)
    expected = np.array(REFERENCE_MODEL.coefficients)
    expected[0] = (expected[0] + math.pi / 2) % math.pi - math.pi / 2
    assert np.allclose(got, expected, atol=1e-8)
    assert fit.converged and not fit.branch_resolved


def test_calibration_branch_resolution():
    two = voltage_data(REFERENCE_MODEL, 1, 2, 2000, 5)
    one = voltage_data(REFERENCE_MODEL, -1, 1, 2000, 6)
    fit = resolve_branch(fit_phase_voltage(two), one)
    assert fit.branch_resolved
    v = np.linspace(0, 5, 200)
    rms = np.sqrt(np.mean((fit.model(v) - REFERENCE_MODEL(v)) ** 2))
    assert rms < 0.05


def test_calibration_rejects_flat_and_short_data():
    v = np.linspace(0, 5, 50)
    with pytest.raises(FitError):
        fit_phase_voltage(FringeData.poissonian(v, np.full(50, 100), "voltage"))
    with pytest.raises(FitError):
        fit_phase_voltage(FringeData.poissonian(v[:5], np.arange(5) + 1, "voltage"))
    with pytest.raises(ValueError):
        fit_phase_voltage(FringeData.poissonian(v, np.arange(50) + 1, "phase"))


def test_unresolvable_branch_flagged():
    two = voltage_data(REFERENCE_MODEL, 1, 2, 2000, 5)
    v = np.linspace(0, 5, 50)
    flat = FringeData.poissonian(v, np.full(50, 1000), "voltage")
    fit = resolve_branch(fit_phase_voltage(two), flat)
    assert not fit.branch_resolved
    assert any("did not separate" in n for n in fit.notes)


# --- dip ---------------------------------------------------------------------


@pytest.mark.parametrize("shape", ["gaussian", "sinc2"])
def test_dip_fit_noiseless(shape):
    from qwaveguide.analysis import _dip_shape

    t = np.linspace(-600, 600, 81)
    y = 1000 * (1 - 0.6 * _dip_shape((t - 20) / 200, shape))
    fit = fit_dip(FringeData(t, y, np.ones_like(y), "delay"), shape)
    assert fit.visibility == pytest.approx(0.6, abs=1e-8)
    assert fit.center == pytest.approx(20, abs=1e-6)
    assert hom_visibility(FringeData(t, y, np.ones_like(y), "delay"), shape) == pytest.approx(0.6, abs=1e-8)


def test_flat_dip_flagged():
    t = np.linspace(-600, 600, 41)
    data = FringeData.poissonian(t, np.full(41, 1000), "delay")
    with pytest.warns(FitWarning):
        fit = fit_dip(data)
    assert not fit.resolved and fit.visibility == 0.0


# --- figures of merit ------------------------------------------------------------


def test_sql_threshold():
    assert contrast_beats_sql(0.72) == (True, pytest.approx(0.72 - SQL_THRESHOLD))
    assert not contrast_beats_sql(0.70)[0]
    with pytest.raises(ValueError):
        contrast_beats_sql(1.2)


@given(st.floats(0, 1))
def test_fidelity_matches_fine_quadrature(c):
    assert average_fidelity(c) == pytest.approx(oracles.fidelity_quadrature(c), abs=1e-6)


def test_fidelity_endpoints_and_monotone():
    assert average_fidelity(1.0) == 1.0
    cs = np.linspace(0, 1, 21)
    f = [average_fidelity(c) for c in cs]
    assert np.all(np.diff(f) > 0)


def test_contrast_within_three_standard_errors():
    hits = 0
    for seed in range(200):
        fit = fit_fringe(fringe(0.95, 2, 1000, 10_000 + seed), 2)
        hits += abs(fit.contrast - 0.95) <= 3 * fit.contrast_error
    assert hits >= 190


def test_calibration_reduced_chi2_self_consistent():
    inside = 0
    for seed in range(100):
        fit = fit_phase_voltage(voltage_data(REFERENCE_MODEL, 1, 2, 2000, 500 + seed))
        inside += 0.5 <= fit.reduced_chi2 <= 1.5
    # chi^2/dof with 44 degrees of freedom has a spread of about 0.21, so a
    # few percent of honest fits land outside [0.5, 1.5]
    assert inside >= 95


@pytest.mark.parametrize("eta", [0.05, 0.2, 0.5, 0.8, 0.95])
def test_dip_fit_recovers_ideal_visibility(eta):
    from qwaveguide.circuit import coupler_unitary
    from qwaveguide.detection import (
        DetectionPattern,
        OverlapModel,
        distinguishable_mixture_probability,
        hom_visibility_ideal,
        overlap,
    )

    om = OverlapModel()
    u = coupler_unitary(eta)
    t = np.linspace(-600, 600, 121)
    pat = DetectionPattern.of(1, 1)
    y = np.array([distinguishable_mixture_probability(u, (1, 1), pat, overlap(om, x)) for x in t]) * 1e5
    fit = fit_dip(FringeData(t, y, np.sqrt(y), "delay"))
    assert fit.visibility == pytest.approx(hom_visibility_ideal(eta), rel=1e-3)
