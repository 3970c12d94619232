"""Seasonal lag weights and their least-squares fit to the positive ACF.

The weight of an observation ``m`` hours before the target period is::

    w(m) = r1**m + r2**m * r3**sin(pi*m/24)**2 * r4**sin(pi*m/168)**2

with every parameter in ``(0, 1)``. An extra scale ``r0`` is fitted so that
``r0*w`` matches ``ACF+``; it is not used when weighting the KDE.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "WeightModel",
    "weight",
    "weight_loss",
    "log_weight",
    "relative_weights",
    "fit_weights",
    "weights_for_horizon",
]

LOWER, UPPER = 1e-6, 1.0 - 1e-6
FD_STEP = 1e-6


def weight(rho, m):
    """Evaluate ``w(m)`` for ``rho = (r1, r2, r3, r4)``; vectorised over ``m``."""
    r1, r2, r3, r4 = (float(r) for r in rho)
    m = np.asarray(m, dtype=float)
    daily = np.sin(np.pi * m / 24.0) ** 2
    weekly = np.sin(np.pi * m / 168.0) ** 2
    return r1**m + r2**m * r3**daily * r4**weekly


def log_weight(rho, m):
    """``log w(m)``, finite where ``w`` itself underflows (large ``m``, small ``rho``)."""
    lr = np.log(np.asarray(rho, dtype=float))
    m = np.asarray(m, dtype=float)
    daily = np.sin(np.pi * m / 24.0) ** 2
    weekly = np.sin(np.pi * m / 168.0) ** 2
    return np.logaddexp(m * lr[0], m * lr[1] + daily * lr[2] + weekly * lr[3])


def relative_weights(model, m):
    """Weights for lags ``m`` rescaled so the largest is one.

    The kernel estimator normalises by the weight sum, so a common factor
    cancels; rescaling in the log domain keeps distant horizons from
    underflowing to an all-zero weight vector.
    """
    if hasattr(model, "log_weight"):
        lw = model.log_weight(m)
        return np.exp(lw - lw.max())
    return np.asarray(model(m), dtype=float)


def weight_loss(params, acf_plus):
    """Mean squared gap between ``ACF+(1..M)`` and ``r0*w(1..M)``; ``params = (r0..r4)``."""
    acf_plus = np.asarray(acf_plus, dtype=float)
    m = np.arange(1, len(acf_plus) + 1)
    resid = acf_plus - params[0] * weight(params[1:], m)
    return float(np.mean(resid**2))


def _central_grad(f, x, h=FD_STEP):
    g = np.empty_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


@dataclass
class WeightModel:
    """Fitted weight-function parameters ``rho = (r0, r1, r2, r3, r4)``."""

    rho: np.ndarray
    M: int
    loss: float
    starts: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        if self.rho.shape != (5,) or np.any(self.rho <= 0) or np.any(self.rho >= 1):
            raise ValueError("rho must hold five values in (0, 1)")

    @property
    def seasonal(self):
        """``(r1, r2, r3, r4)``, the parameters of ``w`` itself."""
        return self.rho[1:]

    def __call__(self, m):
        return weight(self.seasonal, m)

    def log_weight(self, m):
        return log_weight(self.seasonal, m)

    @property
    def w_table(self):
        return self(np.arange(1, self.M + 1))

    def to_dict(self):
        return {"rho": self.rho.tolist(), "M": self.M, "loss": self.loss}

    @classmethod
    def from_dict(cls, d):
        return cls(rho=np.asarray(d["rho"]), M=int(d["M"]), loss=float(d["loss"]))


def fit_weights(acf_plus, init=None, n_random=9, rng=None):
    """Fit ``(r0..r4)`` by box-constrained quasi-Newton least squares.

    Runs L-BFGS-B with central-difference gradients from ``init`` (if given)
    plus ``n_random`` uniform random starts in the box and keeps the best
    result; the first of equally good optima wins.

    Parameters
    ----------
    acf_plus : array of shape (M,)
        Target ``ACF+`` at lags ``1..M``; ``M >= 168``.
    init : sequence of 5 floats, optional
        Seed point ``(r0, r1, r2, r3, r4)``.
    n_random : int
        Number of extra uniform random starts.
    rng : numpy Generator or int, optional
    """
    acf_plus = np.asarray(acf_plus, dtype=float)
    M = len(acf_plus)
    if M < 168:
        raise ValueError("need at least 168 lags (one weekly cycle)")
    rng = np.random.default_rng(rng)
    starts = [] if init is None else [np.clip(np.asarray(init, dtype=float), LOWER, UPPER)]
    starts += [rng.uniform(LOWER, UPPER, 5) for _ in range(n_random)]
    if not starts:
        raise ValueError("no starting points")

    f = lambda x: weight_loss(x, acf_plus)  # noqa: E731
    best = None
    records = []
    failures = []
    for x0 in starts:
        try:
            res = minimize(
                f,
                x0,
                jac=lambda x: _central_grad(f, x),
                method="L-BFGS-B",
                bounds=[(LOWER, UPPER)] * 5,
                options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12},
            )
        except (ValueError, FloatingPointError) as exc:
            failures.append(f"{np.round(x0, 4).tolist()}: {exc}")
            continue
        if not np.isfinite(res.fun):
            failures.append(f"{np.round(x0, 4).tolist()}: non-finite loss")
            continue
        records.append({"x0": x0.tolist(), "loss0": f(x0), "x": res.x.tolist(), "loss": float(res.fun)})
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise RuntimeError("all starts failed: " + "; ".join(failures))
    rho = np.clip(best.x, LOWER, UPPER)
    return WeightModel(rho=rho, M=M, loss=f(rho), starts=records)


def weights_for_horizon(model, u, T):
    """Weights ``w(u - t)`` for past periods ``t = 1..T`` (requires ``u > T``)."""
    if u <= T:
        raise ValueError("period not in the future")
    lags = u - np.arange(1, T + 1)
    return model(lags)
