"""Comparisons between observed and predicted point patterns.

Densities compared here are unweighted network KDEs sharing one bandwidth.
Ratios and logarithms are only evaluated where densities exceed ``EPS``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .kde import NetworkKDE, bandwidth_rule
from .planar import PlanarDensityField, PlanarKDE, PlanarWindow, planar_kde, sample_planar

__all__ = [
    "EPS",
    "RelRiskField",
    "McTestResult",
    "RiseResult",
    "relative_risk",
    "mc_random_labelling_test",
    "ise_network",
    "rise",
    "pooled_bandwidth",
    "PlanarWindow",
    "PlanarDensityField",
    "PlanarKDE",
    "planar_kde",
    "sample_planar",
]

EPS = 1e-12


def _xy(p):
    return p.xy if hasattr(p, "xy") else np.asarray(p, dtype=float).reshape(-1, 2)


def pooled_bandwidth(*patterns):
    """Bandwidth rule applied to the union of the patterns."""
    return bandwidth_rule(np.vstack([_xy(p) for p in patterns]))


@dataclass
class RelRiskField:
    """``rho = gA / (gA + gB)`` per pixel; NaN where undefined."""

    raster: object
    values: np.ndarray
    bandwidth_common: float

    @property
    def defined(self):
        return np.isfinite(self.values)

    def fraction_within(self, lo=0.4, hi=0.6):
        """Share of defined network pixels with ``lo <= rho <= hi``."""
        v = self.values[self.defined]
        return float(np.mean((v >= lo) & (v <= hi))) if v.size else float("nan")


def relative_risk(A, B, raster, h=None):
    """Relative risk of pattern ``A`` against ``B`` on the raster's network.

    The common bandwidth defaults to the bandwidth rule on ``A`` and ``B``
    pooled together.
    """
    if len(A) == 0 or len(B) == 0:
        raise ValueError("relative risk needs two non-empty patterns")
    h = pooled_bandwidth(A, B) if h is None else float(h)
    kde = NetworkKDE(raster, h)
    ga, gb = kde(A).values, kde(B).values
    s = ga + gb
    ok = (raster.mass > 0) & (s > EPS)
    rho = np.full(raster.shape, np.nan)
    rho[ok] = ga[ok] / s[ok]
    return RelRiskField(raster, rho, h)


@dataclass
class McTestResult:
    t_obs: float
    t_sim: np.ndarray
    p_value: float
    bandwidth: float
    mask_hash: str
    masked_mass_fraction: float

    @property
    def k(self):
        return int(np.sum(self.t_sim > self.t_obs))


def _mask_hash(mask):
    return hashlib.sha1(np.packbits(mask).tobytes() + str(mask.shape).encode()).hexdigest()


def mc_random_labelling_test(A, B, raster, n_perm=99, rng=None, h=None):
    """Monte Carlo test of random labelling between two network patterns.

    The statistic is ``sum(mass * log(gA / gB)**2)`` over network pixels
    where the pooled density exceeds ``EPS``; this mask is fixed before any
    relabelling so every statistic integrates over the same pixels, and
    densities are floored at ``EPS`` inside the logarithm. Relabellings
    keep ``n_A`` and ``n_B`` fixed. ``p = (k + 1) / (n_perm + 1)`` where
    ``k`` counts permuted statistics strictly above the observed one.
    """
    if n_perm < 19:
        raise ValueError("need at least 19 permutations")
    nA, nB = len(A), len(B)
    if nA == 0 or nB == 0:
        raise ValueError("both patterns must be non-empty")
    rng = np.random.default_rng(rng)
    h = pooled_bandwidth(A, B) if h is None else float(h)
    kde = NetworkKDE(raster, h)
    pix, inv = kde.prepare(np.vstack([_xy(A), _xy(B)]))
    n = nA + nB
    size = raster.nx * raster.ny
    conv_all = kde.convolver(np.bincount(pix, weights=inv, minlength=size).reshape(raster.shape))
    on = raster.mass > 0
    mask = on & (conv_all / n > EPS)
    m = raster.mass[mask]
    c_all = conv_all[mask]

    def stat(idx_a):
        dep = np.bincount(pix[idx_a], weights=inv[idx_a], minlength=size).reshape(raster.shape)
        ca = kde.convolver(dep)[mask]
        ga = np.maximum(ca / nA, EPS)
        gb = np.maximum((c_all - ca) / nB, EPS)
        return float(np.sum(m * np.log(ga / gb) ** 2))

    t_obs = stat(np.arange(nA))
    t_sim = np.array([stat(rng.permutation(n)[:nA]) for _ in range(n_perm)])
    k = int(np.sum(t_sim > t_obs))
    masked = 1.0 - float(m.sum() / raster.mass.sum())
    return McTestResult(t_obs, t_sim, (k + 1) / (n_perm + 1), h, _mask_hash(mask), masked)


def ise_network(pred, obs, raster, h=None, kde=None):
    """``sum(mass * (g_pred - g_obs)**2)`` with a shared bandwidth (pooled rule by default)."""
    if len(pred) == 0 or len(obs) == 0:
        raise ValueError("ISE needs two non-empty patterns")
    if kde is None:
        kde = NetworkKDE(raster, pooled_bandwidth(pred, obs) if h is None else h)
    d = kde(pred).values - kde(obs).values
    return float(np.sum(raster.mass * d * d))


@dataclass
class RiseResult:
    value: float
    retained_measure: float
    excluded_measure: float

    def __float__(self):
        return self.value

    @property
    def excluded_fraction(self):
        tot = self.retained_measure + self.excluded_measure
        return self.excluded_measure / tot if tot else 0.0


def _measure(field):
    if isinstance(field, PlanarDensityField):
        return field.measure()
    return field.raster.mass


def rise(pred, obs, eps=EPS):
    """Relative ISE ``integral(((pred - obs) / obs)**2)`` over the field's domain.

    Works for network fields (arc-length measure) and planar fields (area
    measure inside the window). Pixels with ``obs <= eps`` are excluded and
    their measure reported.
    """
    meas = _measure(obs)
    if pred.values.shape != obs.values.shape:
        raise ValueError("fields are on different grids")
    support = meas > 0
    keep = support & (obs.values > eps)
    excluded = float(meas[support & ~keep].sum())
    retained = float(meas[keep].sum())
    if excluded > 0.5 * (excluded + retained):
        raise ValueError("obs density too sparse: more than half the measure falls below eps")
    r = (pred.values[keep] - obs.values[keep]) / obs.values[keep]
    return RiseResult(float(np.sum(meas[keep] * r * r)), retained, excluded)
