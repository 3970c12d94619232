"""Log-linear Poisson additive model for hourly counts.

The linear predictor is::

    log mu_t = b0 + b1*year_t + dow_t + f_{dow_t}(hour_t) + g(week_t)

with ``dow_t`` treatment contrasts against Sunday, one centred cyclic cubic
smooth of hour per day of the week, and a centred cyclic cubic smooth of
week of the year. Coefficients are unpenalised and fitted by IRLS.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = [
    "CyclicSplineBasis",
    "TemporalModel",
    "FitError",
    "ALL_TERMS",
    "DOW_NAMES",
    "build_cyclic_basis",
    "fit_temporal",
    "predict_mu",
    "poisson_deviance",
]

ALL_TERMS = ("year", "dow", "hour", "week")
DOW_NAMES = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
SUNDAY = 6
HOUR_PERIOD = 24.0
WEEK_PERIOD = 53.0


class FitError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class CyclicSplineBasis:
    """Cardinal cyclic cubic spline basis with ``K`` evenly spaced knots.

    Basis function ``j`` is the periodic C2 cubic spline equal to 1 at knot
    ``j`` and 0 at the other knots, so the columns sum to one everywhere.
    """

    def __init__(self, period, K):
        if K < 4:
            raise ValueError("cyclic basis needs K >= 4")
        self.period = float(period)
        self.K = int(K)
        self.knots = np.arange(self.K) * self.period / self.K
        eye = np.eye(self.K)
        x = np.append(self.knots, self.period)
        self._spline = CubicSpline(x, np.vstack([eye, eye[:1]]), bc_type="periodic")

    @property
    def basis_dim(self):
        return self.K

    def __call__(self, x, nu=0):
        x = np.mod(np.asarray(x, dtype=float), self.period)
        return self._spline(x, nu)

    def centring(self, grid):
        """``(K, K-1)`` map onto coefficients whose smooth sums to zero on ``grid``."""
        c = self(grid).sum(axis=0)
        q, _ = np.linalg.qr(c.reshape(-1, 1), mode="complete")
        return q[:, 1:]


def build_cyclic_basis(period, K):
    return CyclicSplineBasis(period, K)


def _grids():
    return np.arange(24.0), np.arange(53.0)


@dataclass
class _Design:
    K: int
    terms: tuple
    hour_basis: CyclicSplineBasis = field(init=False)
    week_basis: CyclicSplineBasis = field(init=False)
    z_hour: np.ndarray = field(init=False)
    z_week: np.ndarray = field(init=False)

    def __post_init__(self):
        unknown = set(self.terms) - set(ALL_TERMS)
        if unknown:
            raise ValueError(f"unknown terms {sorted(unknown)}")
        hg, wg = _grids()
        self.hour_basis = CyclicSplineBasis(HOUR_PERIOD, self.K)
        self.week_basis = CyclicSplineBasis(WEEK_PERIOD, self.K)
        self.z_hour = self.hour_basis.centring(hg)
        self.z_week = self.week_basis.centring(wg)

    def blocks(self):
        k1 = self.K - 1
        out = [("intercept", 1)]
        if "year" in self.terms:
            out.append(("year", 1))
        if "dow" in self.terms:
            out.append(("dow", 6))
        if "hour" in self.terms:
            out.append(("hour", 7 * k1))
        if "week" in self.terms:
            out.append(("week", k1))
        return out

    def matrix(self, cov):
        n = len(cov.hour)
        cols = [np.ones((n, 1))]
        if "year" in self.terms:
            cols.append(np.asarray(cov.year, dtype=float).reshape(-1, 1))
        dow = np.asarray(cov.dow)
        if "dow" in self.terms:
            d = np.zeros((n, 6))
            rows = np.flatnonzero(dow != SUNDAY)
            d[rows, dow[rows]] = 1.0
            cols.append(d)
        if "hour" in self.terms:
            bh = self.hour_basis(cov.hour) @ self.z_hour
            k1 = bh.shape[1]
            h = np.zeros((n, 7 * k1))
            for day in range(7):
                rows = dow == day
                h[rows, day * k1 : (day + 1) * k1] = bh[rows]
            cols.append(h)
        if "week" in self.terms:
            cols.append(self.week_basis(np.asarray(cov.week, dtype=float) - 1.0) @ self.z_week)
        return np.hstack(cols)


@dataclass
class TemporalModel:
    """Fitted coefficients of the hourly Poisson additive model.

    ``coef`` is the full coefficient vector in design order; the named
    attributes are views into it. ``dow_effects`` are Monday..Saturday
    contrasts against Sunday; ``hour_coefs[d]`` are the centred hourly
    smooth coefficients for day ``d`` (Monday = 0).
    """

    coef: np.ndarray
    K: int = 10
    terms: tuple = ALL_TERMS
    cov: np.ndarray | None = None
    deviance: float = float("nan")
    iterations: int = 0
    deviance_trace: list = field(default_factory=list)

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float)
        self.terms = tuple(self.terms)
        self._design = _Design(self.K, self.terms)
        if len(self.coef) != sum(n for _, n in self._design.blocks()):
            raise ValueError("coefficient count does not match basis dimensions")

    def _block(self, name):
        start = 0
        for b, n in self._design.blocks():
            if b == name:
                return slice(start, start + n)
            start += n
        return None

    def _get(self, name, shape=None, default=0.0):
        sl = self._block(name)
        if sl is None:
            return default
        out = self.coef[sl]
        return out.reshape(shape) if shape else out

    @property
    def beta0(self):
        return float(self.coef[0])

    @property
    def beta_year(self):
        return float(self._get("year", default=np.zeros(1))[0]) if "year" in self.terms else 0.0

    @property
    def dow_effects(self):
        return self._get("dow", default=np.zeros(6))

    @property
    def hour_coefs(self):
        return self._get("hour", shape=(7, self.K - 1), default=np.zeros((7, self.K - 1)))

    @property
    def week_coefs(self):
        return self._get("week", default=np.zeros(self.K - 1))

    @property
    def std_errors(self):
        if self.cov is None:
            return None
        return np.sqrt(np.diag(self.cov))

    def names(self):
        out = ["(Intercept)"]
        if "year" in self.terms:
            out.append("Year")
        if "dow" in self.terms:
            out.extend(DOW_NAMES[:6])
        if "hour" in self.terms:
            out.extend(f"s(hour):{DOW_NAMES[d]}.{j + 1}" for d in range(7) for j in range(self.K - 1))
        if "week" in self.terms:
            out.extend(f"s(week).{j + 1}" for j in range(self.K - 1))
        return out

    def design(self, cov):
        return self._design.matrix(cov)

    def hour_effect(self, day, hours=None):
        """Fitted hourly smooth for one day of the week (Monday = 0)."""
        hours = np.arange(24.0) if hours is None else np.asarray(hours, dtype=float)
        return self._design.hour_basis(hours) @ self._design.z_hour @ self.hour_coefs[day]

    def week_effect(self, weeks=None):
        weeks = np.arange(1.0, 54.0) if weeks is None else np.asarray(weeks, dtype=float)
        return self._design.week_basis(weeks - 1.0) @ self._design.z_week @ self.week_coefs

    def to_dict(self):
        return {
            "family": "poisson",
            "link": "log",
            "K": self.K,
            "terms": list(self.terms),
            "knots": {
                "hour": self._design.hour_basis.knots.tolist(),
                "week": self._design.week_basis.knots.tolist(),
            },
            "periods": {"hour": HOUR_PERIOD, "week": WEEK_PERIOD},
            "reference": {"dow": "Sunday"},
            "coef": self.coef.tolist(),
            "names": self.names(),
            "cov": None if self.cov is None else self.cov.tolist(),
            "deviance": self.deviance,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            coef=np.asarray(d["coef"]),
            K=int(d["K"]),
            terms=tuple(d["terms"]),
            cov=None if d.get("cov") is None else np.asarray(d["cov"]),
            deviance=float(d.get("deviance", float("nan"))),
            iterations=int(d.get("iterations", 0)),
        )


def poisson_deviance(y, mu):
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ylogy = np.where(y > 0, y * np.log(y / mu), 0.0)
    return float(2.0 * np.sum(ylogy - (y - mu)))


def _rank_check(X, blocks):
    if np.linalg.matrix_rank(X) == X.shape[1]:
        return
    start, rank = 0, 0
    for name, n in blocks:
        r = np.linalg.matrix_rank(X[:, : start + n])
        if r < rank + n:
            raise FitError(f"rank deficient design: block {name!r} is collinear with earlier terms")
        rank, start = r, start + n


def fit_temporal(y, cov, K=10, terms=ALL_TERMS, max_iter=50, tol=1e-8):
    """Fit the hourly Poisson additive model by IRLS.

    Parameters
    ----------
    y : array of shape (T,)
        Hourly counts.
    cov : HourlyCovariates
        Calendar covariates aligned with ``y``.
    K : int
        Knots per cyclic smooth (evenly spaced).
    terms : tuple
        Subset of ``("year", "dow", "hour", "week")``; the intercept is
        always present.

    Raises
    ------
    FitError
        On rank deficiency, too few observations, or non-convergence.
    """
    y = np.asarray(y, dtype=float)
    if len(y) != len(cov):
        raise ValueError("counts and covariates differ in length")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    if not np.any(y > 0):
        raise FitError("all counts are zero; intercept would be -inf")
    design = _Design(int(K), tuple(terms))
    X = design.matrix(cov)
    p = X.shape[1]
    if len(y) < 10 * p:
        raise FitError(f"need at least {10 * p} observations for {p} coefficients, got {len(y)}")
    _rank_check(X, design.blocks())

    mu = y + 0.1
    eta = np.log(mu)
    beta = None
    dev = poisson_deviance(y, mu)
    trace = [dev]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = mu
        z = eta + (y - mu) / mu
        sw = np.sqrt(w)
        new_beta = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)[0]
        step = 1.0
        for _ in range(40):
            cand = new_beta if beta is None else beta + step * (new_beta - beta)
            new_eta = X @ cand
            new_mu = np.exp(new_eta)
            new_dev = poisson_deviance(y, new_mu)
            if np.isfinite(new_dev) and (beta is None or new_dev <= dev):
                break
            step *= 0.5
        else:
            if beta is None:
                raise FitError("initial IRLS step produced a non-finite deviance", trace)
            # no descent direction left at rounding level
            converged = True
            break
        rel = abs(dev - new_dev) / (abs(new_dev) + 0.1)
        beta, eta, mu, dev = cand, new_eta, new_mu, new_dev
        trace.append(dev)
        if rel < tol:
            converged = True
            break
    if not converged:
        raise FitError(f"IRLS did not converge in {max_iter} iterations", trace)
    if any(b > a for a, b in zip(trace[1:], trace[2:])):
        raise FitError("IRLS deviance increased", trace)

    xtwx = X.T @ (X * mu[:, None])
    covmat = np.linalg.inv(xtwx)
    return TemporalModel(
        coef=beta, K=int(K), terms=tuple(terms), cov=covmat, deviance=dev, iterations=it, deviance_trace=trace
    )


def predict_mu(model, cov):
    """Expected hourly counts ``exp(X beta)`` for covariate rows."""
    return np.exp(model.design(cov) @ model.coef)
