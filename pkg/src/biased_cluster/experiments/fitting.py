"""Finite-size scaling fits of logical error rate curves.

Near the crossing the logical error rate is modelled as

    P_L = A + B x + C x^2 + D d^(-mu),   x = (p - p_th) d^(1/nu)

and fitted by inverse-variance weighted least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit

REQUIRED_COLUMNS = ("d", "p", "trials", "failures")


class FitError(RuntimeError):
    pass


class FitDegenerateError(FitError):
    """The data show no crossing (flat in x)."""


@dataclass
class ThresholdFit:
    p_th: float
    p_th_se: float
    nu: float
    mu: Optional[float]
    coeffs: dict  # A, B, C, D
    chi2: float
    dof: int
    residuals: np.ndarray = field(repr=False)
    finite_size: bool = True
    alternate: Optional[ThresholdFit] = field(default=None, repr=False)
    alternate_error: Optional[str] = None

    @property
    def reduced_chi2(self) -> float:
        return self.chi2 / max(self.dof, 1)

    def predict(self, d, p):
        out = _model_full(np.vstack([np.atleast_1d(np.asarray(p, float)), np.atleast_1d(np.asarray(d, float))]),
                          *self._params())
        return float(out[0]) if np.ndim(p) == 0 and np.ndim(d) == 0 else out

    def _params(self):
        c = self.coeffs
        return (self.p_th, self.nu, c["A"], c["B"], c["C"], c.get("D", 0.0), self.mu if self.mu is not None else 1.0)

    def summary(self) -> dict:
        out = {
            "p_th": self.p_th, "p_th_se": self.p_th_se, "nu": self.nu, "mu": self.mu,
            **self.coeffs, "chi2": self.chi2, "dof": self.dof, "finite_size": self.finite_size,
        }
        if self.alternate is not None:
            out["alternate"] = self.alternate.summary()
        elif self.alternate_error:
            out["alternate_error"] = self.alternate_error
        return out


def _model_full(X, p_th, nu, A, B, C, D, mu):
    p, d = X
    x = (p - p_th) * d ** (1.0 / nu)
    return A + B * x + C * x**2 + D * d ** (-mu)


def _model_reduced(X, p_th, nu, A, B, C):
    p, d = X
    x = (p - p_th) * d ** (1.0 / nu)
    return A + B * x + C * x**2


def table_arrays(table) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(d, p, trials, failures) arrays from rows (dicts) or a DataFrame."""
    if hasattr(table, "to_dict"):
        table = table.to_dict("records")
    rows = list(table)
    if not rows:
        raise ValueError("empty result table")
    missing = [c for c in REQUIRED_COLUMNS if c not in rows[0]]
    if missing:
        raise KeyError(f"result table is missing columns: {', '.join(missing)}")
    d = np.array([float(r["d"]) for r in rows])
    p = np.array([float(r["p"]) for r in rows])
    trials = np.array([float(r["trials"]) for r in rows])
    failures = np.array([float(r["failures"]) for r in rows])
    return d, p, trials, failures


def crossing_estimate(d, p, rate) -> float:
    """p where the curves of different d are closest, by linear interpolation."""
    ds = np.unique(d)
    lo = max(p[d == k].min() for k in ds)
    hi = min(p[d == k].max() for k in ds)
    if hi <= lo:
        raise FitError("distances share no common p-range")
    grid = np.linspace(lo, hi, 401)
    curves = []
    for k in ds:
        sel = d == k
        order = np.argsort(p[sel])
        curves.append(np.interp(grid, p[sel][order], rate[sel][order]))
    curves = np.array(curves)
    # slope-signed spread: the crossing is where larger d stops being better
    spread = curves.std(axis=0)
    return float(grid[np.argmin(spread)])


def monotonicity_violations(table, sigmas: float = 3.0) -> list[tuple[int, float, float]]:
    """(d, p_lo, p_hi) for adjacent grid points where the rate drops by more than ``sigmas`` SE.

    A sanity flag only: isolated drops are expected in long sweeps.
    """
    d, p, trials, failures = table_arrays(table)
    rate = failures / trials
    se = _sigma(rate, trials)
    out = []
    for k in np.unique(d):
        idx = np.flatnonzero(d == k)
        idx = idx[np.argsort(p[idx])]
        for i, j in zip(idx[:-1], idx[1:]):
            if rate[i] - rate[j] > sigmas * np.hypot(se[i], se[j]):
                out.append((int(k), float(p[i]), float(p[j])))
    return out


def _sigma(rate, trials):
    # floor keeps zero-failure points from getting infinite weight
    r = (rate * trials + 0.5) / (trials + 1.0)
    return np.sqrt(r * (1 - r) / trials)


def fit_threshold(table, finite_size: bool = False, p_init: Optional[float] = None) -> ThresholdFit:
    """Fit the scaling ansatz and return the headline fit.

    The headline is the quadratic form (D = 0) unless ``finite_size`` is
    set. The other form is always attempted too and attached as
    ``alternate``. With three distances the D d^(-mu) term can absorb the
    per-distance offsets that locate the crossing, so its p_th is poorly
    constrained.
    """
    d, p, trials, failures = table_arrays(table)
    ds = np.unique(d)
    if len(ds) < 3:
        raise ValueError("need at least 3 distances")
    if any(len(np.unique(p[d == k])) < 4 for k in ds):
        raise ValueError("need at least 4 p-values per distance")
    rate = failures / trials
    sigma = _sigma(rate, trials)
    if np.ptp(rate) < 2 * sigma.max():
        raise FitDegenerateError("logical error rate is flat; no crossing in the data")

    p0 = crossing_estimate(d, p, rate) if p_init is None else p_init
    X = np.vstack([p, d])
    x0 = (p - p0) * d
    B0, A0 = np.polyfit(x0, rate, 1)
    quad = _fit(_model_reduced, X, rate, sigma, [p0, 1.0, A0, B0, 0.0], p, False)
    start = [quad.p_th, quad.nu, quad.coeffs["A"], quad.coeffs["B"], quad.coeffs["C"], 0.0, 1.0]
    full, err = None, None
    try:
        full = _fit(_model_full, X, rate, sigma, start, p, True)
    except FitError as exc:
        if finite_size:
            raise
        err = str(exc)
    head, other = (full, quad) if finite_size else (quad, full)
    head.alternate = other
    head.alternate_error = err
    return head


def _fit(model, X, y, sigma, start, p, finite_size) -> ThresholdFit:
    span = np.ptp(p)
    if finite_size:
        lower = [p.min() - span, 0.2, -np.inf, -np.inf, -np.inf, -np.inf, 0.1]
        upper = [p.max() + span, 5.0, np.inf, np.inf, np.inf, np.inf, 6.0]
    else:
        lower = [p.min() - span, 0.2, -np.inf, -np.inf, -np.inf]
        upper = [p.max() + span, 5.0, np.inf, np.inf, np.inf]
    try:
        popt, pcov = curve_fit(model, X, y, p0=start, sigma=sigma, absolute_sigma=True,
                               bounds=(lower, upper), max_nfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"scaling fit did not converge: {exc}") from exc
    perr = np.sqrt(np.clip(np.diag(pcov), 0, np.inf))
    resid = (y - model(X, *popt)) / sigma
    B, C = popt[3], popt[4]
    if abs(B) < 2 * perr[3] and abs(C) < 2 * perr[4]:
        raise FitDegenerateError(f"B={B:.3g}+-{perr[3]:.2g} and C={C:.3g}+-{perr[4]:.2g} are indistinguishable from 0")
    p_th = float(popt[0])
    if not (p.min() <= p_th <= p.max()):
        raise FitError(f"fitted p_th={p_th:.5g} outside the scanned range [{p.min():.5g}, {p.max():.5g}]")
    if not np.isfinite(perr[0]):
        raise FitError("p_th standard error is not finite")
    coeffs = {"A": float(popt[2]), "B": float(B), "C": float(C)}
    mu = None
    if finite_size:
        coeffs["D"] = float(popt[5])
        mu = float(popt[6])
    return ThresholdFit(
        p_th, float(perr[0]), float(popt[1]), mu, coeffs,
        float(np.sum(resid**2)), int(len(y) - len(popt)), resid, finite_size,
    )


def synthetic_table(p_th: float, nu: float, coeffs: dict, mu: float, distances, ps, trials: int,
                    rng: np.random.Generator) -> list[dict]:
    """Binomially sampled rows drawn from the ansatz itself."""
    rows = []
    for d in distances:
        for p in ps:
            mean = _model_full(np.array([[p], [d]], float), p_th, nu, coeffs["A"], coeffs["B"],
                               coeffs["C"], coeffs.get("D", 0.0), mu)[0]
            mean = float(np.clip(mean, 0.0, 1.0))
            rows.append({"d": d, "p": p, "trials": trials, "failures": int(rng.binomial(trials, mean))})
    return rows
