"""Sampling future point patterns on the network from fitted models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .ingest import hourly_covariates
from .kde import NetworkKDE
from .net import NetworkPattern
from .temporal import predict_mu
from .weights import relative_weights

__all__ = [
    "SimulationPlan",
    "SimulationResult",
    "FieldSampler",
    "sample_points",
    "replicate_generators",
    "simulate_horizon",
    "RNG_ALGORITHM",
]

RNG_ALGORITHM = "numpy PCG64 via SeedSequence.spawn"


def replicate_generators(seed, n):
    """Independent per-replicate generators split from one seed."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


class FieldSampler:
    """Draws network locations with density proportional to a pixel field.

    A pixel is chosen with probability ``values * mass``; inside it a
    clipped piece is chosen proportionally to its length and the position
    is uniform along that piece.
    """

    def __init__(self, values, raster):
        self.raster = raster
        p = (np.asarray(values, dtype=float) * raster.mass).reshape(-1)
        total = p.sum()
        if not total > 0:
            raise ValueError("cannot sample from an all-zero field")
        self.pixel_cdf = np.cumsum(p) / total
        self.piece_cum = np.concatenate([[0.0], np.cumsum(raster.piece_len)])

    def sample(self, n, rng):
        r = self.raster
        n = int(n)
        if n < 0:
            raise ValueError("n must be non-negative")
        if n == 0:
            return NetworkPattern(r.net, np.empty(0, np.int64), np.empty(0))
        pix = np.searchsorted(self.pixel_cdf, rng.random(n) * self.pixel_cdf[-1], side="right")
        pix = np.minimum(pix, len(self.pixel_cdf) - 1)
        lo, hi = r.piece_ptr[pix], r.piece_ptr[pix + 1]
        start, end = self.piece_cum[lo], self.piece_cum[hi]
        target = start + rng.random(n) * (end - start)
        piece = np.clip(np.searchsorted(self.piece_cum, target, side="right") - 1, lo, hi - 1)
        frac = np.clip((target - self.piece_cum[piece]) / r.piece_len[piece], 0.0, 1.0)
        t = r.piece_t0[piece] + frac * (r.piece_t1[piece] - r.piece_t0[piece])
        return NetworkPattern(r.net, r.piece_seg[piece], t)


def sample_points(g, n, rng):
    """Draw ``n`` locations from a :class:`~netstpp.kde.DensityField`."""
    return FieldSampler(g.values, g.raster).sample(n, rng)


@dataclass
class SimulationPlan:
    """What to simulate.

    Parameters
    ----------
    horizon : array of int
        Future period indices ``u`` (all greater than the training ``T``).
    counts_mode : {"observed", "poisson"}
        ``"observed"`` uses ``observed_counts`` (aligned with ``horizon``);
        ``"poisson"`` draws ``y_u ~ Poisson(mu_u)`` from the temporal model.
    replicate_count : int
    seed : int
    """

    horizon: np.ndarray
    counts_mode: str = "poisson"
    replicate_count: int = 1
    seed: int = 0
    observed_counts: np.ndarray | None = None

    def __post_init__(self):
        self.horizon = np.asarray(self.horizon, dtype=np.int64).reshape(-1)
        if self.counts_mode not in ("observed", "poisson"):
            raise ValueError("counts_mode must be 'observed' or 'poisson'")
        if self.replicate_count < 1:
            raise ValueError("replicate_count must be >= 1")
        if self.counts_mode == "observed":
            if self.observed_counts is None:
                raise ValueError("observed counts required for counts_mode='observed'")
            self.observed_counts = np.asarray(self.observed_counts, dtype=np.int64).reshape(-1)
            if len(self.observed_counts) != len(self.horizon):
                raise ValueError("observed_counts must align with horizon")


@dataclass
class SimulationResult:
    """Simulated locations for every replicate and period."""

    net: object
    replicate: np.ndarray
    period: np.ndarray
    pattern: NetworkPattern
    mu: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict, repr=False)
    metadata: dict = field(default_factory=dict)

    def pooled(self, replicate=0):
        """All periods of one replicate collapsed into one pattern."""
        return self.pattern.take(self.replicate == replicate)

    def at(self, replicate, period):
        return self.pattern.take((self.replicate == replicate) & (self.period == period))

    @property
    def replicate_count(self):
        return int(self.metadata.get("replicate_count", self.replicate.max() + 1 if len(self.replicate) else 0))

    def to_frame(self):
        xy = self.pattern.xy
        return pd.DataFrame(
            {
                "replicate": self.replicate,
                "period": self.period,
                "x": xy[:, 0],
                "y": xy[:, 1],
                "segment_id": self.pattern.segment_id,
                "t": self.pattern.t,
            }
        )

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def simulate_horizon(plan, events, raster, h, weights=None, temporal=None, kde=None, keep_fields=False):
    """Simulate every period of ``plan.horizon`` from the weighted KDE.

    For each future period ``u`` the training events are weighted by
    ``w(u - t)`` (or uniformly when ``weights`` is ``None``, the separable
    variant), the density ``g_u`` is estimated, ``y_u`` is obtained per
    ``plan.counts_mode`` and ``y_u`` points are drawn from ``g_u``.

    Parameters
    ----------
    plan : SimulationPlan
    events : EventSet
        Training events; every horizon period must exceed ``events.T``.
    raster : NetworkRaster
    h : float
    weights : WeightModel, optional
    temporal : TemporalModel, optional
        Required when ``plan.counts_mode == "poisson"``.
    kde : NetworkKDE, optional
        Reused when given (must match ``raster`` and ``h``).
    """
    if len(plan.horizon) == 0:
        raise ValueError("empty horizon")
    if plan.horizon.min() <= events.T:
        raise ValueError("horizon periods must lie after the training data")
    if plan.counts_mode == "poisson" and temporal is None:
        raise ValueError("counts_mode='poisson' needs a temporal model")
    kde = kde or NetworkKDE(raster, h)
    prepared = kde.prepare(events.pattern)
    rngs = replicate_generators(plan.seed, plan.replicate_count)

    mu = {}
    if plan.counts_mode == "poisson":
        cov = hourly_covariates(events.origin, plan.horizon)
        mu = dict(zip(plan.horizon.tolist(), predict_mu(temporal, cov).tolist()))

    reps, pers, segs, ts = [], [], [], []
    fields = {}
    sampler = None
    for k, u in enumerate(plan.horizon.tolist()):
        try:
            if weights is None:
                if sampler is None:
                    g = kde.field(prepared)
                    sampler = FieldSampler(g.values, raster)
            else:
                g = kde.field(prepared, relative_weights(weights, u - events.period))
                sampler = FieldSampler(g.values, raster)
            if keep_fields:
                fields[u] = g
            for r, rng in enumerate(rngs):
                n = plan.observed_counts[k] if plan.counts_mode == "observed" else rng.poisson(mu[u])
                pts = sampler.sample(n, rng)
                reps.append(np.full(len(pts), r))
                pers.append(np.full(len(pts), u))
                segs.append(pts.segment_id)
                ts.append(pts.t)
        except ValueError as exc:
            raise ValueError(f"period {u}: {exc}") from exc

    pattern = NetworkPattern(raster.net, np.concatenate(segs), np.concatenate(ts))
    meta = {
        "rng": RNG_ALGORITHM,
        "seed": plan.seed,
        "replicate_count": plan.replicate_count,
        "counts_mode": plan.counts_mode,
        "separable": weights is None,
        "bandwidth": float(h),
    }
    return SimulationResult(
        raster.net,
        np.concatenate(reps).astype(np.int64),
        np.concatenate(pers).astype(np.int64),
        pattern,
        mu=mu,
        fields=fields,
        metadata=meta,
    )
