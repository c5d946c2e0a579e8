import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwaveguide import oracles
from qwaveguide.circuit import coupler_unitary, evolve, mz_interferometer
from qwaveguide.detection import (
    TWO_LEVEL_TREE,
    DetectionPattern,
    DetectorModel,
    OverlapModel,
    cascade_click_probability,
    combined_outcome_probability,
    detected_probability,
    distinguishable_mixture_probability,
    distinguishable_transition_probability,
    hom_visibility_ideal,
    make_record,
    outcome_probability,
    overlap,
    point_rng,
    read_sweep_csv,
    sample_counts,
    thinned_distribution,
    write_sweep_csv,
)
from qwaveguide.fock import FockVector


def test_pattern_helpers():
    p = DetectionPattern.of(3, 1)
    assert p.photons == 4
    assert p.matches((3, 1)) and not p.matches((1, 3))
    assert p.mirrored().matches((1, 3))
    with pytest.raises(ValueError):
        DetectionPattern({0: -1})


def test_outcome_on_noon_state():
    out = evolve(FockVector.basis((1, 1)), coupler_unitary(0.5))
    assert outcome_probability(out, DetectionPattern.of(2, 0)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        outcome_probability(out, DetectionPattern({4: 1}))


def test_combined_four_photon_outcomes():
    phi = 0.3
    out = evolve(FockVector.basis((2, 2)), mz_interferometer(phi))
    p31 = DetectionPattern.of(3, 1)
    assert outcome_probability(out, p31) == pytest.approx(3 / 16 * (1 - math.cos(4 * phi)))
    combined = combined_outcome_probability(out, [p31, p31.mirrored()])
    assert combined == pytest.approx(3 / 8 * (1 - math.cos(4 * phi)))


@given(st.floats(0.01, 0.99))
def test_hom_visibility_matches_closed_form(eta):
    u = coupler_unitary(eta)
    pat = DetectionPattern.of(1, 1)
    p_ind = distinguishable_mixture_probability(u, (1, 1), pat, 1.0)
    p_dis = distinguishable_mixture_probability(u, (1, 1), pat, 0.0)
    assert (p_dis - p_ind) / p_dis == pytest.approx(hom_visibility_ideal(eta), abs=1e-9)


def test_distinguishable_probability_classical():
    u = coupler_unitary(0.3)
    # independent particles: P(1,1) = R^2 + T^2
    assert distinguishable_transition_probability(u, (1, 1), (1, 1)) == pytest.approx(0.09 + 0.49)


def test_mixture_rejects_bad_overlap():
    with pytest.raises(ValueError):
        distinguishable_mixture_probability(coupler_unitary(0.5), (1, 1), DetectionPattern.of(1, 1), 1.2)


def test_overlap_models():
    g = OverlapModel()
    assert g.coherence_length_um == pytest.approx(780**2 / 3 * 1e-3)
    assert overlap(g, 0.0) == 1.0
    assert overlap(g, g.coherence_length_um) == pytest.approx(math.exp(-math.pi / 2))
    s = OverlapModel(shape="sinc2")
    assert overlap(s, s.coherence_length_um) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        OverlapModel(bandwidth_nm=0)


@given(st.integers(0, 7), st.sampled_from([(0.5, 0.5), TWO_LEVEL_TREE, (0.1, 0.2, 0.3, 0.4)]))
def test_cascade_matches_enumeration(n, tree):
    assert cascade_click_probability(n, tree) == pytest.approx(
        oracles.all_click_probability_by_enumeration(n, tree), abs=1e-12
    )


def test_cascade_known_values():
    assert cascade_click_probability(3, TWO_LEVEL_TREE) == pytest.approx(3 / 16)
    assert cascade_click_probability(3, (1 / 3,) * 3) == pytest.approx(2 / 9)
    with pytest.raises(ValueError):
        cascade_click_probability(2, ())


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorModel(efficiency=1.2)
    with pytest.raises(ValueError):
        DetectorModel(cascades={0: (0.5, 0.6)})
    assert DetectorModel(efficiency={0: 0.5}).efficiency_of(1) == 1.0


def test_thinning_conserves_probability():
    v = FockVector.from_pairs([((2, 1), 0.6), ((0, 3), 0.8)])
    dist = thinned_distribution(v, DetectorModel(efficiency=0.7))
    assert sum(dist.values()) == pytest.approx(1.0)


def test_efficiency_path_equals_thinning_for_fixed_number_input():
    out = evolve(FockVector.basis((2, 2)), mz_interferometer(0.4))
    det = DetectorModel(efficiency=0.6, number_resolving=False, cascades={0: TWO_LEVEL_TREE})
    pat = DetectionPattern.of(3, 1)
    a = detected_probability(out, pat, det, "efficiency")
    b = detected_probability(out, pat, det, "thinning")
    # the only four-photon input: no higher terms can fake the event
    assert a == pytest.approx(b, rel=1e-12)


def test_click_detector_needs_cascade():
    out = evolve(FockVector.basis((2, 2)), mz_interferometer(0.4))
    with pytest.raises(ValueError):
        detected_probability(out, DetectionPattern.of(3, 1), DetectorModel(number_resolving=False), "thinning")


def test_sampling_is_seeded():
    a = [sample_counts(0.3, 1000, point_rng(7, i)) for i in range(5)]
    b = [sample_counts(0.3, 1000, point_rng(7, i)) for i in range(5)]
    assert a == b
    assert sample_counts(0.0, 1000, 1) == 0
    with pytest.raises(ValueError):
        sample_counts(1.5, 10, 1)


@settings(max_examples=20)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 1), st.integers(0, 10**6)), min_size=1, max_size=10))
def test_csv_round_trip(rows):
    recs = [make_record(*r) for r in rows]
    text = write_sweep_csv(recs, {"seed": 3})
    back, meta = read_sweep_csv(text)
    assert back == recs
    assert meta["schema-version"] == "1" and meta["seed"] == "3"


def test_csv_rejects_other_schema():
    with pytest.raises(ValueError):
        read_sweep_csv("# schema-version: 2\nsetting,ideal_probability,counts,error\n")
