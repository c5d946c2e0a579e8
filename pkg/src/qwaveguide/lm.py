"""Damped Gauss-Newton (Levenberg-Marquardt) for weighted least squares."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FitError(ValueError):
    """Data cannot support the requested fit."""


@dataclass
class LMResult:
    params: np.ndarray
    covariance: np.ndarray
    chi2: float
    dof: int
    iterations: int
    converged: bool
    message: str

    @property
    def uncertainties(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / self.dof if self.dof > 0 else float("nan")


def levenberg_marquardt(
    residuals,
    jacobian,
    p0,
    max_iter: int = 200,
    xtol: float = 1e-10,
    ftol: float = 1e-10,
    gtol: float = 1e-10,
    lam0: float = 1e-3,
) -> LMResult:
    """Minimize ``sum(residuals(p)**2)``.

    ``residuals(p)`` returns the weighted residual vector (data - model)/sigma
    and ``jacobian(p)`` the derivative of that residual vector with respect
    to ``p``. Damping is scaled by diag(J^T J). Convergence means, within
    ``max_iter`` outer iterations, one of: relative step below ``xtol``;
    relative chi^2 decrease below ``ftol`` on a lightly damped step; the
    decrease predicted for the undamped Gauss-Newton step below ``ftol``
    (relative); scaled gradient below ``gtol``. Heavily damped steps never count as converged,
    since their small size says nothing about the minimum.
    """
    p = np.array(p0, dtype=float)
    r = residuals(p)
    chi2 = float(r @ r)
    lam = lam0
    converged = False
    message = "iteration cap reached"
    it = 0
    for it in range(1, max_iter + 1):
        J = jacobian(p)
        g = J.T @ r
        A = J.T @ J
        scale = np.diag(A).copy()
        scale[scale == 0] = 1.0
        if np.max(np.abs(g) / np.sqrt(scale)) <= gtol * max(np.sqrt(chi2), 1.0):
            converged = True
            message = "converged (gradient)"
            break
        try:
            predicted = float(g @ np.linalg.solve(A, g))
        except np.linalg.LinAlgError:
            predicted = np.inf
        if 0 <= predicted <= ftol * max(chi2, 1e-300):
            converged = True
            message = "converged (predicted decrease)"
            break
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(scale), g)
            except np.linalg.LinAlgError:
                lam *= 10
                if lam > 1e16:
                    break
                continue
            p_new = p - step
            r_new = residuals(p_new)
            chi2_new = float(r_new @ r_new)
            if np.isfinite(chi2_new) and chi2_new <= chi2:
                break
            lam *= 10
            if lam > 1e16:
                break
        if lam > 1e16:
            message = "damping diverged; no downhill step"
            break
        light = lam <= 1e2
        rel_step = np.max(np.abs(step) / (np.abs(p) + 1e-12))
        rel_drop = (chi2 - chi2_new) / max(chi2, 1e-300)
        p, r, chi2 = p_new, r_new, chi2_new
        lam = max(lam / 10, 1e-12)
        if light and (rel_step < xtol or rel_drop < ftol):
            converged = True
            message = "converged"
            break
    J = jacobian(p)
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((p.size, p.size), np.nan)
    return LMResult(p, cov, chi2, r.size - p.size, it, converged, message)
