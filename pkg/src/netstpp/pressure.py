"""Potential demand pressure on stations from simulated events."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.sparse.csgraph import dijkstra

from .net import NetworkPattern, UnreachableError, snap_points, split_graph
from .simulate import simulate_horizon

__all__ = [
    "StationSet",
    "PressureReport",
    "StationAssigner",
    "read_stations",
    "assign_nearest_station",
    "station_shares",
    "pressure_report",
]

TIE_RTOL = 1e-12
TIE_ATOL = 1e-9


@dataclass
class StationSet:
    ids: list
    pattern: NetworkPattern

    def __post_init__(self):
        self.ids = list(self.ids)
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("station ids must be unique")
        if len(self.ids) != len(self.pattern):
            raise ValueError("ids and locations differ in length")

    def __len__(self):
        return len(self.ids)

    @classmethod
    def from_locations(cls, net, ids, locations):
        return cls(ids, NetworkPattern.from_locations(net, locations))


def read_stations(path, net, max_snap=50.0):
    """Read ``id,x,y`` stations and snap them to the network."""
    df = pd.read_csv(path)
    missing = {"id", "x", "y"} - set(df.columns)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    seg, t, _ = snap_points(net, df[["x", "y"]].to_numpy(dtype=float), max_snap)
    far = seg < 0
    if far.any():
        raise ValueError(f"stations farther than {max_snap} m from the network: {df['id'][far].tolist()}")
    return StationSet(df["id"].tolist(), NetworkPattern(net, seg, t))


class StationAssigner:
    """Nearest station by shortest-path distance, ties to the lowest id.

    Station locations are inserted as graph nodes and one Dijkstra pass per
    station gives exact distances to every node; an event then needs only
    the two nodes bracketing it on its own segment.
    """

    def __init__(self, net, stations):
        if len(stations) == 0:
            raise ValueError("no stations")
        self.net = net
        order = sorted(range(len(stations)), key=lambda i: stations.ids[i])
        self.ids = [stations.ids[i] for i in order]
        self.seg = stations.pattern.segment_id[order]
        self.pos = (1.0 - stations.pattern.t[order]) * net.lengths[self.seg]
        graph, self.nodes = split_graph(net, self.seg, stations.pattern.t[order])
        self.dist = dijkstra(graph, directed=False, indices=self.nodes)  # (S, N)
        # stations per segment sorted by arc position, for bracketing
        o = np.lexsort((self.pos, self.seg))
        self._s_seg, self._s_pos, self._s_node = self.seg[o], self.pos[o], self.nodes[o]

    def distances(self, pattern):
        """``(S, n)`` shortest-path distances from each station to each event."""
        e = pattern.segment_id
        pos = (1.0 - pattern.t) * self.net.lengths[e]
        left = self.net.seg_nodes[e, 0].copy()
        right = self.net.seg_nodes[e, 1].copy()
        dl = pos.copy()
        dr = self.net.lengths[e] - pos
        touched = np.flatnonzero(np.isin(e, self._s_seg))
        for i in touched:
            lo = np.searchsorted(self._s_seg, e[i], "left")
            hi = np.searchsorted(self._s_seg, e[i], "right")
            sp_, sn = self._s_pos[lo:hi], self._s_node[lo:hi]
            k = np.searchsorted(sp_, pos[i], "right")
            if k > 0:
                left[i], dl[i] = sn[k - 1], pos[i] - sp_[k - 1]
            if k < len(sp_):
                right[i], dr[i] = sn[k], sp_[k] - pos[i]
        return np.minimum(dl + self.dist[:, left], dr + self.dist[:, right])

    def assign(self, pattern, chunk=50_000):
        """Index (into sorted ``ids``) of the nearest station for each event."""
        out = np.empty(len(pattern), dtype=np.int64)
        for lo in range(0, len(pattern), chunk):
            d = self.distances(pattern.take(slice(lo, lo + chunk)))
            dmin = d.min(axis=0)
            if not np.all(np.isfinite(dmin)):
                raise UnreachableError("unreachable: event not connected to any station")
            tie = d <= dmin * (1 + TIE_RTOL) + TIE_ATOL
            out[lo : lo + chunk] = np.argmax(tie, axis=0)
        return out

    def assign_ids(self, pattern):
        return [self.ids[i] for i in self.assign(pattern)]


def assign_nearest_station(net, event, stations):
    """Id of the station closest to one :class:`NetworkLocation`."""
    pat = NetworkPattern(net, [event.segment_id], [event.t])
    return StationAssigner(net, stations).assign_ids(pat)[0]


@dataclass
class PressureReport:
    station_ids: list
    shares: np.ndarray  # (replicates, stations), percent
    skipped: int = 0

    @property
    def replicate_count(self):
        return len(self.shares)

    @property
    def mean_share(self):
        return self.shares.mean(axis=0)

    @property
    def std_share(self):
        if len(self.shares) < 2:
            return np.zeros(self.shares.shape[1])
        return self.shares.std(axis=0, ddof=1)

    def to_frame(self):
        return pd.DataFrame({"station_id": self.station_ids, "mean_share": self.mean_share, "std_share": self.std_share})

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def station_shares(patterns, stations, assigner=None):
    """Percentage of each pattern's events assigned to each station, averaged over patterns."""
    if not patterns:
        raise ValueError("no patterns")
    assigner = assigner or StationAssigner(patterns[0].net, stations)
    rows, skipped = [], 0
    for pat in patterns:
        if len(pat) == 0:
            skipped += 1
            warnings.warn("replicate with zero events skipped", stacklevel=2)
            continue
        counts = np.bincount(assigner.assign(pat), minlength=len(assigner.ids))
        rows.append(100.0 * counts / counts.sum())
    if not rows:
        raise ValueError("every replicate was empty")
    return PressureReport(list(assigner.ids), np.vstack(rows), skipped)


def pressure_report(plan, events, raster, h, stations, weights=None, temporal=None):
    """Simulate ``plan`` and summarise station shares over its replicates."""
    sim = simulate_horizon(plan, events, raster, h, weights=weights, temporal=temporal)
    pats = [sim.pooled(r) for r in range(plan.replicate_count)]
    return station_shares(pats, stations)

