"""Synthetic networks and event streams with a known space-time structure.

Used by the test-suite, the demos and the CLI smoke runs. The generated
process has hourly counts ``y_t ~ Poisson(mu_t)`` with a diurnal and weekly
profile, and locations drawn from a density that drifts between a daytime
and a night-time hotspot over the day (daily space-time interaction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.spatial import Delaunay

from .ingest import EventSet, hourly_covariates
from .net import NetworkPattern, build_network

__all__ = [
    "lattice_network",
    "random_planar_network",
    "uniform_on_network",
    "thinned_on_network",
    "Scenario",
    "make_scenario",
    "diurnal_profile",
]


def lattice_network(nx=10, ny=10, spacing=100.0, holes=(), rng=None, drop=0.0):
    """Street grid of ``nx`` by ``ny`` blocks.

    ``holes`` is a sequence of ``(xmin, ymin, xmax, ymax)`` boxes whose
    interior streets are removed (parks, rail yards); ``drop`` removes a
    random fraction of the remaining streets.
    """
    rng = np.random.default_rng(rng)
    segs = []
    for j in range(ny + 1):
        for i in range(nx):
            segs.append((i * spacing, j * spacing, (i + 1) * spacing, j * spacing))
    for i in range(nx + 1):
        for j in range(ny):
            segs.append((i * spacing, j * spacing, i * spacing, (j + 1) * spacing))
    segs = np.array(segs, dtype=float)
    mid = 0.5 * (segs[:, :2] + segs[:, 2:])
    keep = np.ones(len(segs), dtype=bool)
    for xmin, ymin, xmax, ymax in holes:
        keep &= ~((mid[:, 0] > xmin) & (mid[:, 0] < xmax) & (mid[:, 1] > ymin) & (mid[:, 1] < ymax))
    if drop > 0:
        keep &= rng.random(len(segs)) >= drop
    return build_network(segs[keep])


def random_planar_network(n_nodes=50, extent=1000.0, rng=None, keep=0.7):
    """Connected planar network from a thinned Delaunay triangulation."""
    rng = np.random.default_rng(rng)
    pts = rng.uniform(0, extent, (n_nodes, 2))
    tri = Delaunay(pts)
    edges = set()
    for s in tri.simplices:
        for a, b in ((s[0], s[1]), (s[1], s[2]), (s[0], s[2])):
            edges.add((min(a, b), max(a, b)))
    edges = sorted(edges)
    # spanning tree first so the result stays connected
    parent = list(range(n_nodes))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    order = rng.permutation(len(edges))
    chosen = []
    for k in order:
        a, b = edges[k]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            chosen.append((a, b))
        elif rng.random() < keep:
            chosen.append((a, b))
    segs = [(*pts[a], *pts[b]) for a, b in chosen]
    return build_network(segs)


def uniform_on_network(net, n, rng):
    """``n`` points uniformly distributed with respect to arc length."""
    rng = np.random.default_rng(rng)
    seg = np.searchsorted(np.cumsum(net.lengths) / net.total_length, rng.random(n), side="right")
    seg = np.minimum(seg, net.n_segments - 1)
    return NetworkPattern(net, seg, rng.random(n))


def thinned_on_network(net, density, n, rng, bound, labels=None):
    """Draw ``n`` points with density proportional to ``density(xy, labels)`` by thinning.

    ``bound`` must dominate ``density`` everywhere; ``labels`` (length ``n``)
    is passed through so the target density may differ per point.
    """
    rng = np.random.default_rng(rng)
    seg = np.empty(n, dtype=np.int64)
    t = np.empty(n)
    todo = np.arange(n)
    while len(todo):
        prop = uniform_on_network(net, len(todo), rng)
        lab = None if labels is None else labels[todo]
        acc = rng.random(len(todo)) * bound < density(prop.xy, lab)
        seg[todo[acc]] = prop.segment_id[acc]
        t[todo[acc]] = prop.t[acc]
        todo = todo[~acc]
    return NetworkPattern(net, seg, t)


def diurnal_profile(hour):
    """Share of the daytime hotspot at a given hour: 1 at 14:00, 0 at 02:00."""
    return 0.5 * (1.0 + np.cos(2 * np.pi * (np.asarray(hour, dtype=float) - 14.0) / 24.0))


@dataclass
class Scenario:
    """A synthetic dataset with its generating truth."""

    net: object
    events: EventSet
    mu: np.ndarray
    day_centre: tuple
    night_centre: tuple
    spread: float
    background: float

    def density(self, xy, hour):
        """Unnormalised true spatial density at planar ``xy`` for hour(s) ``hour``."""
        a = diurnal_profile(hour)
        d1 = np.sum((xy - self.day_centre) ** 2, axis=1)
        d2 = np.sum((xy - self.night_centre) ** 2, axis=1)
        s2 = 2 * self.spread**2
        return self.background + a * np.exp(-d1 / s2) + (1 - a) * np.exp(-d2 / s2)

    def frame(self, rng=None):
        """Events as a ``timestamp,x,y`` table (random minute within the hour)."""
        rng = np.random.default_rng(rng)
        ev = self.events
        minutes = rng.integers(0, 60, len(ev))
        ts = ev.origin + pd.to_timedelta((ev.period - 1) * 60 + minutes, unit="min")
        xy = ev.xy
        return pd.DataFrame({"timestamp": ts.strftime("%Y-%m-%d %H:%M"), "x": xy[:, 0], "y": xy[:, 1]})


def make_scenario(
    net,
    n_hours,
    origin="2017-01-02 00:00",
    mean_rate=20.0,
    amplitude=0.6,
    interaction=True,
    day_centre=None,
    night_centre=None,
    spread=None,
    background=0.15,
    rng=None,
):
    """Simulate ``n_hours`` of events on ``net``.

    Counts follow ``log mu_t = log(mean_rate) + amplitude*cos(2 pi (hour - 14)/24)``
    plus a small weekday effect. With ``interaction`` the spatial density
    moves between two hotspots over the day; without it the density is the
    24-hour average mixture (separable truth).
    """
    rng = np.random.default_rng(rng)
    xmin, ymin, xmax, ymax = net.bbox
    w, hgt = xmax - xmin, ymax - ymin
    day_centre = np.array(day_centre if day_centre is not None else (xmin + 0.3 * w, ymin + 0.65 * hgt))
    night_centre = np.array(night_centre if night_centre is not None else (xmin + 0.72 * w, ymin + 0.3 * hgt))
    spread = float(spread if spread is not None else 0.15 * max(w, hgt))

    cov = hourly_covariates(origin, n_hours)
    dow_eff = np.array([0.05, 0.0, 0.0, 0.0, 0.02, -0.05, -0.08])
    log_mu = np.log(mean_rate) + amplitude * np.cos(2 * np.pi * (cov.hour - 14.0) / 24.0) + dow_eff[cov.dow]
    mu = np.exp(log_mu)
    y = rng.poisson(mu)
    period = np.repeat(np.arange(1, n_hours + 1), y)
    hour = cov.hour[period - 1].astype(float)
    if not interaction:
        hour = np.full(len(period), np.nan)

    scen = Scenario(net, None, mu, tuple(day_centre), tuple(night_centre), spread, background)

    def dens(xy, h):
        if interaction:
            return scen.density(xy, h)
        return scen.density(xy, np.full(len(xy), 14.0)) * 0.5 + scen.density(xy, np.full(len(xy), 2.0)) * 0.5

    pat = thinned_on_network(net, dens, len(period), rng, bound=background + 1.0, labels=hour)
    scen.events = EventSet(pat, period, n_hours, pd.Timestamp(origin))
    return scen
