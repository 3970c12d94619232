"""Linear networks: segment storage, snapping, rasterisation and routing.

A network is a union of straight segments ``[u_i, v_i]`` in a projected
metric CRS. A location on segment ``i`` is written ``s = t*u_i + (1-t)*v_i``
with ``t`` in ``[0, 1]``, so ``t = 1`` sits on ``u_i`` and ``t = 0`` on ``v_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

__all__ = [
    "Segment",
    "LinearNetwork",
    "NetworkLocation",
    "NetworkPattern",
    "NetworkRaster",
    "UnreachableError",
    "build_network",
    "read_network",
    "snap_point",
    "snap_points",
    "rasterize",
    "raster_for_bandwidth",
    "shortest_path_distance",
    "split_graph",
]


class UnreachableError(ValueError):
    """Raised when two network locations lie in different components."""

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components


@dataclass(frozen=True)
class Segment:
    u: tuple
    v: tuple

    @property
    def length(self):
        return float(np.hypot(self.v[0] - self.u[0], self.v[1] - self.u[1]))


@dataclass(frozen=True)
class NetworkLocation:
    """A point on the network: segment id, position ``t`` and planar ``xy``."""

    segment_id: int
    t: float
    xy: tuple
    snap_distance: float = 0.0


class LinearNetwork:
    """Immutable set of segments plus the node graph derived from them.

    Use :func:`build_network` rather than calling the constructor directly.
    """

    def __init__(self, u, v, seg_nodes, node_xy):
        self.u = np.ascontiguousarray(u, dtype=float)
        self.v = np.ascontiguousarray(v, dtype=float)
        self.seg_nodes = np.ascontiguousarray(seg_nodes, dtype=np.int64)
        self.node_xy = np.ascontiguousarray(node_xy, dtype=float)
        self.lengths = np.hypot(*(self.v - self.u).T)
        for arr in (self.u, self.v, self.seg_nodes, self.node_xy, self.lengths):
            arr.flags.writeable = False
        self._graph = None
        self._index = None
        self._components = None

    def __repr__(self):
        return (
            f"LinearNetwork(n_segments={self.n_segments}, n_nodes={self.n_nodes}, "
            f"total_length={self.total_length:.1f})"
        )

    @property
    def n_segments(self):
        return len(self.lengths)

    @property
    def n_nodes(self):
        return len(self.node_xy)

    @property
    def total_length(self):
        return float(self.lengths.sum())

    @property
    def bbox(self):
        """``(xmin, ymin, xmax, ymax)`` of all segment endpoints."""
        pts = np.vstack([self.u, self.v])
        return (*pts.min(axis=0), *pts.max(axis=0))

    @property
    def segments(self):
        return [Segment(tuple(a), tuple(b)) for a, b in zip(self.u, self.v)]

    def segment_array(self):
        """Segments as an ``(n, 4)`` array of ``x1, y1, x2, y2``."""
        return np.hstack([self.u, self.v])

    @property
    def node_index(self):
        return {tuple(xy): i for i, xy in enumerate(self.node_xy)}

    @property
    def adjacency(self):
        """Per-node list of ``(neighbour, segment_id, length)``."""
        adj = [[] for _ in range(self.n_nodes)]
        for s, (a, b) in enumerate(self.seg_nodes):
            adj[a].append((int(b), s, float(self.lengths[s])))
            adj[b].append((int(a), s, float(self.lengths[s])))
        return adj

    @property
    def graph(self):
        """Symmetric sparse node graph weighted by segment length."""
        if self._graph is None:
            self._graph = _graph_from_edges(
                self.seg_nodes[:, 0], self.seg_nodes[:, 1], self.lengths, self.n_nodes
            )
        return self._graph

    @property
    def components(self):
        if self._components is None:
            _, self._components = connected_components(self.graph, directed=False)
        return self._components

    @property
    def index(self):
        if self._index is None:
            self._index = SegmentGridIndex(self)
        return self._index

    def xy(self, segment_id, t):
        """Planar coordinates of ``t*u + (1-t)*v`` (vectorised)."""
        segment_id = np.asarray(segment_id, dtype=np.int64)
        t = np.asarray(t, dtype=float)[..., None]
        return t * self.u[segment_id] + (1.0 - t) * self.v[segment_id]

    def location(self, segment_id, t, snap_distance=0.0):
        if not 0 <= segment_id < self.n_segments:
            raise IndexError(f"segment {segment_id} out of range")
        if not 0.0 <= t <= 1.0:
            raise ValueError(f"t={t} outside [0, 1]")
        xy = self.xy(segment_id, t)
        return NetworkLocation(int(segment_id), float(t), (float(xy[0]), float(xy[1])), float(snap_distance))


def _graph_from_edges(a, b, w, n):
    # keep the shortest of parallel edges; explicit zero weights remain edges
    i = np.concatenate([a, b])
    j = np.concatenate([b, a])
    w = np.concatenate([w, w])
    order = np.lexsort((w, j, i))
    i, j, w = i[order], j[order], w[order]
    keep = np.ones(len(i), dtype=bool)
    keep[1:] = (i[1:] != i[:-1]) | (j[1:] != j[:-1])
    i, j, w = i[keep], j[keep], w[keep]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, i + 1, 1)
    return sp.csr_matrix((w, j, np.cumsum(indptr)), shape=(n, n))


def build_network(segments, snap_tolerance=0.01):
    """Build a :class:`LinearNetwork` from raw endpoint pairs.

    Parameters
    ----------
    segments : array-like
        Either an ``(n, 4)`` array of ``x1, y1, x2, y2`` or a sequence of
        ``((x1, y1), (x2, y2))`` pairs, in projected metres.
    snap_tolerance : float
        Endpoints closer than this (metres) are merged into one node. Each
        merged node takes the coordinates of its first endpoint in input
        order. Segments that collapse to zero length are dropped.
    """
    if snap_tolerance < 0:
        raise ValueError("snap_tolerance must be >= 0")
    arr = np.asarray(segments, dtype=float)
    if arr.size == 0:
        raise ValueError("empty network")
    arr = arr.reshape(-1, 4)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite coordinates in network input")

    n = len(arr)
    pts = np.vstack([arr[:, :2], arr[:, 2:]])
    tree = cKDTree(pts)
    pairs = tree.query_pairs(r=snap_tolerance, output_type="ndarray")
    link = sp.coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else ([], ([], [])),
        shape=(2 * n, 2 * n),
    )
    _, comp = connected_components(link, directed=False)
    # renumber components by first appearance, representative = first endpoint
    _, first, inverse = np.unique(comp, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    node_of_pt = rank[inverse]
    node_xy = pts[np.sort(first)]

    nu, nv = node_of_pt[:n], node_of_pt[n:]
    keep = nu != nv
    if not np.any(keep):
        raise ValueError("empty network")
    nu, nv = nu[keep], nv[keep]
    # drop nodes no longer referenced and compact ids
    used, remap = np.unique(np.concatenate([nu, nv]), return_inverse=True)
    k = keep.sum()
    seg_nodes = np.column_stack([remap[:k], remap[k:]])
    node_xy = node_xy[used]
    return LinearNetwork(node_xy[seg_nodes[:, 0]], node_xy[seg_nodes[:, 1]], seg_nodes, node_xy)


def read_network(path, fmt="auto", snap_tolerance=0.01):
    """Read a network from CSV (``x1,y1,x2,y2``) or a GeoJSON of LineStrings."""
    path = Path(path)
    if fmt == "auto":
        fmt = "geojson" if path.suffix.lower() in (".geojson", ".json") else "csv"
    if fmt == "csv":
        import pandas as pd

        df = pd.read_csv(path)
        missing = {"x1", "y1", "x2", "y2"} - set(df.columns)
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        segs = df[["x1", "y1", "x2", "y2"]].to_numpy(dtype=float)
    elif fmt == "geojson":
        segs = _geojson_segments(json.loads(path.read_text()))
    else:
        raise ValueError(f"unknown network format {fmt!r}")
    return build_network(segs, snap_tolerance=snap_tolerance)


def _geojson_segments(doc):
    features = doc.get("features", [doc] if doc.get("type") == "Feature" else [])
    out = []
    for feat in features:
        geom = feat.get("geometry") or {}
        if geom.get("type") == "LineString":
            lines = [geom["coordinates"]]
        elif geom.get("type") == "MultiLineString":
            lines = geom["coordinates"]
        else:
            continue
        for line in lines:
            c = np.asarray(line, dtype=float)[:, :2]
            out.append(np.hstack([c[:-1], c[1:]]))
    if not out:
        raise ValueError("empty network")
    return np.vstack(out)


# --------------------------------------------------------------------------
# snapping
# --------------------------------------------------------------------------


def _project(p, u, v):
    """Perpendicular foot of ``p`` on segments ``[u, v]`` (row-wise)."""
    d = v - u
    dd = np.einsum("ij,ij->i", d, d)
    s = np.einsum("ij,ij->i", p - u, d) / dd
    s = np.clip(s, 0.0, 1.0)
    foot = u + s[:, None] * d
    dist = np.hypot(*(p - foot).T)
    return 1.0 - s, dist


class SegmentGridIndex:
    """Uniform cell grid over segment bounding boxes.

    Used only to prune candidates; distances are always computed exactly,
    so bounded queries return the same answer as a brute-force scan.
    """

    def __init__(self, net, cell_size=None):
        self.net = net
        x0, y0, x1, y1 = net.bbox
        if cell_size is None:
            area = max((x1 - x0) * (y1 - y0), 1.0)
            cell_size = max(np.sqrt(area / max(net.n_segments, 1)), float(np.median(net.lengths)))
        self.cell = float(cell_size)
        self.x0, self.y0 = x0, y0
        self.ncx = int((x1 - x0) // self.cell) + 1
        self.ncy = int((y1 - y0) // self.cell) + 1
        lo = np.minimum(net.u, net.v)
        hi = np.maximum(net.u, net.v)
        ix0, iy0 = self._cell(lo[:, 0], lo[:, 1])
        ix1, iy1 = self._cell(hi[:, 0], hi[:, 1])
        seg, cells = _expand_boxes(ix0, ix1, iy0, iy1, self.ncx)
        order = np.argsort(cells, kind="stable")
        self.cell_seg = seg[order]
        self.cell_ptr = np.searchsorted(cells[order], np.arange(self.ncx * self.ncy + 1))

    def _cell(self, x, y):
        ix = np.clip(np.floor((x - self.x0) / self.cell), 0, self.ncx - 1).astype(np.int64)
        iy = np.clip(np.floor((y - self.y0) / self.cell), 0, self.ncy - 1).astype(np.int64)
        return ix, iy

    def candidates(self, pts, radius):
        """(point index, segment id) pairs whose cells meet the query square."""
        x, y = pts[:, 0], pts[:, 1]
        fx0 = np.floor((x - radius - self.x0) / self.cell)
        fx1 = np.floor((x + radius - self.x0) / self.cell)
        fy0 = np.floor((y - radius - self.y0) / self.cell)
        fy1 = np.floor((y + radius - self.y0) / self.cell)
        outside = (fx1 < 0) | (fy1 < 0) | (fx0 >= self.ncx) | (fy0 >= self.ncy)
        ix0 = np.clip(fx0, 0, self.ncx - 1).astype(np.int64)
        ix1 = np.clip(fx1, 0, self.ncx - 1).astype(np.int64)
        iy0 = np.clip(fy0, 0, self.ncy - 1).astype(np.int64)
        iy1 = np.clip(fy1, 0, self.ncy - 1).astype(np.int64)
        ix1[outside] = ix0[outside] - 1
        pid, cells = _expand_boxes(ix0, ix1, iy0, iy1, self.ncx)
        counts = self.cell_ptr[cells + 1] - self.cell_ptr[cells]
        pid = np.repeat(pid, counts)
        starts = np.repeat(self.cell_ptr[cells], counts)
        offs = np.arange(len(pid)) - np.repeat(np.cumsum(counts) - counts, counts)
        return pid, self.cell_seg[starts + offs]


def _expand_boxes(ix0, ix1, iy0, iy1, ncx):
    """Flatten inclusive cell boxes into (owner, cell id) pairs."""
    nx = np.maximum(ix1 - ix0 + 1, 0)
    ny = np.maximum(iy1 - iy0 + 1, 0)
    counts = nx * ny
    owner = np.repeat(np.arange(len(ix0)), counts)
    k = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    nxo = nx[owner]
    cx = ix0[owner] + k % np.maximum(nxo, 1)
    cy = iy0[owner] + k // np.maximum(nxo, 1)
    return owner, cy * ncx + cx


def snap_points(net, pts, max_dist=50.0, chunk=200_000):
    """Project many points onto their nearest segment.

    Returns
    -------
    seg, t, dist : ndarray
        Segment id (``-1`` when the nearest segment is farther than
        ``max_dist``), position on the segment and Euclidean distance.
        Ties are resolved in favour of the lowest segment id.
    """
    if not max_dist > 0:
        raise ValueError("max_dist must be > 0")
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    n = len(pts)
    seg = np.full(n, -1, dtype=np.int64)
    tpos = np.full(n, np.nan)
    dist = np.full(n, np.inf)
    if not np.isfinite(max_dist):
        return _snap_brute(net, pts)
    index = net.index
    # keep the expanded pair list bounded
    per_point = max(1, int(np.ceil(2 * max_dist / index.cell) + 1) ** 2)
    dens = len(index.cell_seg) / max(index.ncx * index.ncy, 1)
    step = max(1, int(chunk / max(per_point * dens, 1)))
    for lo in range(0, n, step):
        p = pts[lo : lo + step]
        pid, cand = index.candidates(p, max_dist)
        if len(pid) == 0:
            continue
        tt, dd = _project(p[pid], net.u[cand], net.v[cand])
        ok = dd <= max_dist
        pid, cand, tt, dd = pid[ok], cand[ok], tt[ok], dd[ok]
        order = np.lexsort((cand, dd, pid))
        pid, cand, tt, dd = pid[order], cand[order], tt[order], dd[order]
        first = np.ones(len(pid), dtype=bool)
        first[1:] = pid[1:] != pid[:-1]
        sel = lo + pid[first]
        seg[sel], tpos[sel], dist[sel] = cand[first], tt[first], dd[first]
    # distance reported for rejected points is a lower bound only
    rejected = seg < 0
    dist[rejected] = np.inf
    return seg, tpos, dist


def _snap_brute(net, pts):
    seg = np.empty(len(pts), dtype=np.int64)
    tpos = np.empty(len(pts))
    dist = np.empty(len(pts))
    m = net.n_segments
    for k, p in enumerate(pts):
        tt, dd = _project(np.broadcast_to(p, (m, 2)), net.u, net.v)
        j = int(np.argmin(dd))
        seg[k], tpos[k], dist[k] = j, tt[j], dd[j]
    return seg, tpos, dist


def snap_point(net, p, max_dist=50.0):
    """Snap one planar point; returns ``None`` when it is beyond ``max_dist``."""
    seg, t, d = snap_points(net, np.asarray(p, dtype=float).reshape(1, 2), max_dist)
    if seg[0] < 0:
        return None
    return net.location(int(seg[0]), float(t[0]), snap_distance=float(d[0]))


# --------------------------------------------------------------------------
# patterns
# --------------------------------------------------------------------------


@dataclass
class NetworkPattern:
    """A vector of network locations sharing one network."""

    net: LinearNetwork
    segment_id: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        self.segment_id = np.asarray(self.segment_id, dtype=np.int64).reshape(-1)
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        if self.segment_id.shape != self.t.shape:
            raise ValueError("segment_id and t must have the same length")

    def __len__(self):
        return len(self.t)

    @property
    def xy(self):
        if len(self) == 0:
            return np.empty((0, 2))
        return self.net.xy(self.segment_id, self.t)

    def take(self, idx):
        return NetworkPattern(self.net, self.segment_id[idx], self.t[idx])

    def concat(self, *others):
        segs = [self.segment_id] + [o.segment_id for o in others]
        ts = [self.t] + [o.t for o in others]
        return NetworkPattern(self.net, np.concatenate(segs), np.concatenate(ts))

    def locations(self):
        return [self.net.location(int(s), float(t)) for s, t in zip(self.segment_id, self.t)]

    @classmethod
    def from_locations(cls, net, locs):
        locs = list(locs)
        return cls(net, [l.segment_id for l in locs], [l.t for l in locs])


# --------------------------------------------------------------------------
# rasterisation
# --------------------------------------------------------------------------


@dataclass
class NetworkRaster:
    """Pixel image of a network carrying exact clipped arc length per pixel.

    ``mass`` has shape ``(ny, nx)``; row ``j`` spans
    ``y0 + j*pixel_size .. y0 + (j+1)*pixel_size``. Clipped pieces
    (``piece_*`` arrays) are sorted by flat pixel index, with
    ``piece_ptr[p]:piece_ptr[p+1]`` addressing the pieces of pixel ``p``.
    """

    net: LinearNetwork
    origin: tuple
    pixel_size: float
    nx: int
    ny: int
    mass: np.ndarray
    piece_seg: np.ndarray
    piece_t0: np.ndarray
    piece_t1: np.ndarray
    piece_len: np.ndarray
    piece_pixel: np.ndarray
    piece_ptr: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def pixel_area(self):
        return self.pixel_size**2

    def pixel_centers(self):
        """``(X, Y)`` arrays of pixel-centre coordinates, each ``(ny, nx)``."""
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.pixel_size
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.pixel_size
        return np.meshgrid(xs, ys)

    def pixel_index(self, xy, clip=True):
        """Flat index of the pixel containing each point (nearest pixel)."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        ix = np.floor((xy[:, 0] - self.origin[0]) / self.pixel_size).astype(np.int64)
        iy = np.floor((xy[:, 1] - self.origin[1]) / self.pixel_size).astype(np.int64)
        if clip:
            ix = np.clip(ix, 0, self.nx - 1)
            iy = np.clip(iy, 0, self.ny - 1)
        elif np.any((ix < 0) | (ix >= self.nx) | (iy < 0) | (iy >= self.ny)):
            raise ValueError("point outside raster")
        return iy * self.nx + ix

    def sub_segments(self, pixel):
        """Clipped pieces ``(segment_id, t0, t1, length)`` inside one pixel."""
        lo, hi = self.piece_ptr[pixel], self.piece_ptr[pixel + 1]
        return list(
            zip(
                self.piece_seg[lo:hi].tolist(),
                self.piece_t0[lo:hi].tolist(),
                self.piece_t1[lo:hi].tolist(),
                self.piece_len[lo:hi].tolist(),
            )
        )


def rasterize(net, nx, ny, margin=0.0, origin=None, pixel_size=None):
    """Clip every segment exactly against a square-pixel grid.

    The grid covers the network bounding box enlarged by ``margin`` on each
    side; pixels are square with side ``max(width/nx, height/ny)`` and the
    grid is centred on the enlarged box. ``origin`` and ``pixel_size`` may
    be given explicitly instead.
    """
    nx, ny = int(nx), int(ny)
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be positive")
    if pixel_size is None or origin is None:
        xmin, ymin, xmax, ymax = net.bbox
        w = xmax - xmin + 2 * margin
        hgt = ymax - ymin + 2 * margin
        pixel_size = max(w / nx, hgt / ny)
        if pixel_size <= 0:
            raise ValueError("degenerate network extent")
        cx, cy = (xmin + xmax) / 2, (ymin + ymax) / 2
        origin = (cx - nx * pixel_size / 2, cy - ny * pixel_size / 2)
    x0, y0 = origin
    p = float(pixel_size)

    # grid coordinates of the endpoints; walk from u (s=0) to v (s=1)
    gu = (net.u - (x0, y0)) / p
    gv = (net.v - (x0, y0)) / p
    params = [np.zeros(net.n_segments), np.ones(net.n_segments)]
    owners = [np.arange(net.n_segments)] * 2
    for k in (0, 1):
        a, b = gu[:, k], gv[:, k]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        first = np.floor(lo) + 1
        count = np.maximum(np.ceil(hi) - first, 0).astype(np.int64)
        own = np.repeat(np.arange(net.n_segments), count)
        line = np.repeat(first, count) + (np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count))
        params.append((line - a[own]) / (b[own] - a[own]))
        owners.append(own)
    s = np.concatenate(params)
    own = np.concatenate(owners)
    order = np.lexsort((s, own))
    s, own = s[order], own[order]
    same = own[1:] == own[:-1]
    s0, s1, seg = s[:-1][same], s[1:][same], own[:-1][same]
    ds = s1 - s0
    ok = ds > 0
    s0, s1, seg, ds = s0[ok], s1[ok], seg[ok], ds[ok]
    mid = 0.5 * (s0 + s1)
    gm = gu[seg] + mid[:, None] * (gv[seg] - gu[seg])
    # pieces lying along the outer grid boundary stay in the edge pixel;
    # pieces beyond the grid are dropped
    eps = 1e-9
    inside = (gm[:, 0] >= -eps) & (gm[:, 0] <= nx + eps) & (gm[:, 1] >= -eps) & (gm[:, 1] <= ny + eps)
    gm, seg, s0, s1, ds = gm[inside], seg[inside], s0[inside], s1[inside], ds[inside]
    ix = np.clip(np.floor(gm[:, 0]), 0, nx - 1).astype(np.int64)
    iy = np.clip(np.floor(gm[:, 1]), 0, ny - 1).astype(np.int64)
    pix = iy * nx + ix
    plen = ds * net.lengths[seg]

    order = np.argsort(pix, kind="stable")
    pix, seg, s0, s1, plen = pix[order], seg[order], s0[order], s1[order], plen[order]
    mass = np.bincount(pix, weights=plen, minlength=nx * ny).reshape(ny, nx)
    ptr = np.searchsorted(pix, np.arange(nx * ny + 1))
    return NetworkRaster(
        net=net,
        origin=(float(x0), float(y0)),
        pixel_size=p,
        nx=nx,
        ny=ny,
        mass=mass,
        piece_seg=seg,
        piece_t0=1.0 - s0,
        piece_t1=1.0 - s1,
        piece_len=plen,
        piece_pixel=pix,
        piece_ptr=ptr,
    )


def raster_for_bandwidth(net, h, resolution=512, margin_bandwidths=4.0):
    """Rasterise with a ``margin_bandwidths * h`` margin; the long side has ``resolution`` pixels."""
    xmin, ymin, xmax, ymax = net.bbox
    m = margin_bandwidths * h
    w, hgt = xmax - xmin + 2 * m, ymax - ymin + 2 * m
    if w >= hgt:
        nx, ny = resolution, max(1, int(np.ceil(resolution * hgt / w)))
    else:
        ny, nx = resolution, max(1, int(np.ceil(resolution * w / hgt)))
    return rasterize(net, nx, ny, margin=m)


# --------------------------------------------------------------------------
# routing
# --------------------------------------------------------------------------


def split_graph(net, segment_id, t):
    """Node graph with extra nodes inserted at the given locations.

    Returns ``(graph, loc_nodes)`` where ``loc_nodes[k]`` is the node id of
    location ``k``. Original nodes keep their ids; inserted nodes follow.
    Locations at identical positions on the same segment share a node.
    """
    segment_id = np.asarray(segment_id, dtype=np.int64).reshape(-1)
    t = np.asarray(t, dtype=float).reshape(-1)
    n0 = net.n_nodes
    pos = (1.0 - t) * net.lengths[segment_id]  # arc distance from u

    order = np.lexsort((pos, segment_id))
    seg_sorted, pos_sorted = segment_id[order], pos[order]
    new = np.ones(len(order), dtype=bool)
    new[1:] = (seg_sorted[1:] != seg_sorted[:-1]) | (pos_sorted[1:] != pos_sorted[:-1])
    node_sorted = n0 + np.cumsum(new) - 1
    loc_nodes = np.empty(len(order), dtype=np.int64)
    loc_nodes[order] = node_sorted
    n_new = int(new.sum())

    touched = np.zeros(net.n_segments, dtype=bool)
    touched[segment_id] = True
    keep = ~touched
    ea = [net.seg_nodes[keep, 0]]
    eb = [net.seg_nodes[keep, 1]]
    ew = [net.lengths[keep]]
    # chain each touched segment u -> p1 -> ... -> pk -> v
    us, ps, nodes = seg_sorted[new], pos_sorted[new], node_sorted[new]
    if len(us):
        start = np.ones(len(us), dtype=bool)
        start[1:] = us[1:] != us[:-1]
        end = np.ones(len(us), dtype=bool)
        end[:-1] = us[1:] != us[:-1]
        prev_node = np.where(start, net.seg_nodes[us, 0], np.roll(nodes, 1))
        prev_pos = np.where(start, 0.0, np.roll(ps, 1))
        ea.append(prev_node)
        eb.append(nodes)
        ew.append(ps - prev_pos)
        ea.append(nodes[end])
        eb.append(net.seg_nodes[us[end], 1])
        ew.append(net.lengths[us[end]] - ps[end])
    graph = _graph_from_edges(
        np.concatenate(ea), np.concatenate(eb), np.maximum(np.concatenate(ew), 0.0), n0 + n_new
    )
    return graph, loc_nodes


def shortest_path_distance(net, a, b):
    """Shortest-path length in metres between two :class:`NetworkLocation`."""
    graph, nodes = split_graph(net, [a.segment_id, b.segment_id], [a.t, b.t])
    if nodes[0] == nodes[1]:
        return 0.0
    d = dijkstra(graph, directed=False, indices=int(nodes[0]))[nodes[1]]
    if not np.isfinite(d):
        comp = net.components
        ca = int(comp[net.seg_nodes[a.segment_id, 0]])
        cb = int(comp[net.seg_nodes[b.segment_id, 0]])
        raise UnreachableError(f"unreachable: locations in components {ca} and {cb}", (ca, cb))
    return float(d)
