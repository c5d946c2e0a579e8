"""Oracle suites run by ``qwaveguide self-test``.

Each check compares a fast path against an independent reference and
returns a (name, passed, detail) tuple.
"""

from __future__ import annotations

import numpy as np

from . import oracles
from .analysis import average_fidelity
from .circuit import ModeUnitary, coupler_unitary, evolve, permanent
from .detection import (
    DetectionPattern,
    cascade_click_probability,
    distinguishable_mixture_probability,
    hom_visibility_ideal,
)
from .fock import FockVector, enumerate_basis
from .scenario import builtin, builtin_names


def check_basis():
    worst = 0
    for m in range(1, 5):
        for n in range(0, 5):
            ours = [s.occupations for s in enumerate_basis(m, n)]
            ref = sorted(oracles.basis_by_product(m, n), reverse=True)
            worst += ours != ref
    return "basis enumeration", worst == 0, f"{worst} mismatched (m, n) pairs"


def check_permanent(seed: int = 7):
    rng = np.random.default_rng(seed)
    err = 0.0
    for n in range(0, 7):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        err = max(err, abs(permanent(a) - oracles.permanent_by_permutations(a)))
    return "Ryser permanent vs permutation sum", err < 1e-10, f"max error {err:.2e}"


def check_evolution(unitaries: int = 25, seed: int = 11):
    rng = np.random.default_rng(seed)
    err = 0.0
    for _ in range(unitaries):
        for m in range(1, 5):
            u = ModeUnitary(oracles.random_unitary(m, rng))
            for n in range(0, 5):
                for inp in enumerate_basis(m, n):
                    out = evolve(FockVector.basis(inp.occupations), u)
                    ref = oracles.expand_creation_operators(u.matrix, inp.occupations)
                    for occ in set(ref) | {s.occupations for s in out.terms}:
                        err = max(err, abs(out.amplitude(occ) - ref.get(occ, 0.0)))
    return "permanent evolution vs operator expansion", err < 1e-10, f"max error {err:.2e}"


def check_cascade():
    err = 0.0
    trees = [(0.5, 0.5), (0.5, 0.25, 0.25), (0.2, 0.3, 0.1, 0.4)]
    for tree in trees:
        for n in range(0, 7):
            err = max(err, abs(cascade_click_probability(n, tree) - oracles.all_click_probability_by_enumeration(n, tree)))
    return "cascade all-click vs enumeration", err < 1e-12, f"max error {err:.2e}"


def check_hom():
    err = 0.0
    pattern = DetectionPattern.of(1, 1)
    for eta in np.linspace(0.01, 0.99, 50):
        u = coupler_unitary(eta)
        p_ind = distinguishable_mixture_probability(u, (1, 1), pattern, 1.0)
        p_dis = distinguishable_mixture_probability(u, (1, 1), pattern, 0.0)
        err = max(err, abs((p_dis - p_ind) / p_dis - hom_visibility_ideal(eta)))
    return "HOM visibility vs closed form", err < 1e-9, f"max error {err:.2e}"


def check_fidelity():
    err = 0.0
    for c in (0.0, 0.5, 0.9, 0.982, 1.0):
        err = max(err, abs(average_fidelity(c) - oracles.fidelity_quadrature(c)))
    return "average fidelity vs fine quadrature", err < 1e-6, f"max error {err:.2e}"


def check_builtin_laws():
    from .runner import run_scenario

    bad = []
    for name in builtin_names():
        s = builtin(name)
        if s.law is None:
            continue
        s.trials = 1
        res = run_scenario(s)
        if not res.summary["checks"].get("law", False):
            bad.append(name)
    return "built-in scenario closed-form laws", not bad, "all within 1e-10" if not bad else f"failed: {bad}"


SUITES = (
    check_basis,
    check_permanent,
    check_evolution,
    check_cascade,
    check_hom,
    check_fidelity,
    check_builtin_laws,
)


def run_all(echo=print) -> bool:
    ok = True
    for suite in SUITES:
        name, passed, detail = suite()
        ok &= bool(passed)
        echo(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    return ok
