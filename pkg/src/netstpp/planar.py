"""Planar baseline: edge-corrected Gaussian KDE on a window and sampling from it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kde import GaussianConvolver
from .simulate import replicate_generators
from .weights import relative_weights

__all__ = ["PlanarWindow", "PlanarDensityField", "PlanarKDE", "planar_kde", "sample_planar", "simulate_planar_horizon"]


@dataclass
class PlanarWindow:
    """Observation window ``W`` rasterised as a boolean pixel mask ``(ny, nx)``."""

    origin: tuple
    pixel_size: float
    mask: np.ndarray

    @property
    def shape(self):
        return self.mask.shape

    @property
    def pixel_area(self):
        return self.pixel_size**2

    @property
    def area(self):
        return float(self.mask.sum() * self.pixel_area)

    def pixel_centers(self):
        ny, nx = self.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.pixel_size
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.pixel_size
        return np.meshgrid(xs, ys)

    def pixel_index(self, xy):
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        ny, nx = self.shape
        ix = np.floor((xy[:, 0] - self.origin[0]) / self.pixel_size).astype(np.int64)
        iy = np.floor((xy[:, 1] - self.origin[1]) / self.pixel_size).astype(np.int64)
        if np.any((ix < 0) | (ix >= nx) | (iy < 0) | (iy >= ny)):
            raise ValueError("points outside the window grid")
        return iy * nx + ix

    @classmethod
    def rectangle(cls, xmin, ymin, xmax, ymax, pixel_size):
        nx = int(np.ceil((xmax - xmin) / pixel_size))
        ny = int(np.ceil((ymax - ymin) / pixel_size))
        return cls((float(xmin), float(ymin)), float(pixel_size), np.ones((ny, nx), dtype=bool))

    @classmethod
    def on_grid(cls, origin, pixel_size, shape, polygon=None, bbox=None):
        """Window on an existing grid.

        With ``polygon`` the pixels whose centres fall inside it; with
        ``bbox`` every pixel overlapping the box.
        """
        win = cls(tuple(origin), float(pixel_size), np.ones(shape, dtype=bool))
        X, Y = win.pixel_centers()
        if polygon is not None:
            import shapely

            geom = polygon if hasattr(polygon, "geom_type") else shapely.Polygon(polygon)
            win.mask = shapely.contains_xy(geom, X, Y)
        elif bbox is not None:
            # every pixel touching the box, so points on its edge stay inside W
            xmin, ymin, xmax, ymax = bbox
            r = 0.5 * win.pixel_size
            win.mask = (X + r >= xmin) & (X - r <= xmax) & (Y + r >= ymin) & (Y - r <= ymax)
        return win

    @classmethod
    def from_raster(cls, raster, polygon=None):
        """Window sharing a network raster's grid; defaults to the network bounding box."""
        bbox = None if polygon is not None else raster.net.bbox
        return cls.on_grid(raster.origin, raster.pixel_size, raster.shape, polygon=polygon, bbox=bbox)


@dataclass
class PlanarDensityField:
    window: PlanarWindow
    values: np.ndarray  # 1/m**2, zero outside W
    bandwidth: float
    weight_sum: float

    def measure(self):
        return self.window.mask * self.window.pixel_area

    def integral(self):
        return float(np.sum(self.values * self.measure()))


class PlanarKDE:
    """Planar Gaussian KDE with Jones-Diggle edge correction ``c_W(s_i)``."""

    def __init__(self, window, h, workers=None):
        self.window = window
        self.h = float(h)
        self.convolver = GaussianConvolver(window.shape, window.pixel_size, h, workers)
        self.cw = np.maximum(self.convolver(window.mask * window.pixel_area), 0.0)

    def prepare(self, xy):
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        pix = self.window.pixel_index(xy)
        if not np.all(self.window.mask.reshape(-1)[pix]):
            raise ValueError("points outside window W")
        return pix, 1.0 / self.cw.reshape(-1)[pix]

    def field(self, prepared, weights=None):
        pix, inv = prepared
        w = inv if weights is None else np.asarray(weights, dtype=float) * inv
        total = float(len(pix) if weights is None else np.sum(weights))
        if not total > 0:
            raise ValueError("sum of weights must be positive")
        dep = np.bincount(pix, weights=w, minlength=self.window.mask.size).reshape(self.window.shape)
        vals = np.where(self.window.mask, np.maximum(self.convolver(dep), 0.0) / total, 0.0)
        return PlanarDensityField(self.window, vals, self.h, total)

    def __call__(self, xy, weights=None):
        return self.field(self.prepare(xy), weights)


def planar_kde(points, window, h, weights=None):
    return PlanarKDE(window, h)(points, weights)


def sample_planar(field, n, rng):
    """Draw ``n`` planar points: pixel by ``values * area``, then uniform inside it."""
    p = field.values.reshape(-1) * field.window.pixel_area
    total = p.sum()
    if not total > 0:
        raise ValueError("cannot sample from an all-zero field")
    cdf = np.cumsum(p) / total
    pix = np.minimum(np.searchsorted(cdf, rng.random(int(n)) * cdf[-1], side="right"), len(cdf) - 1)
    ny, nx = field.window.shape
    iy, ix = np.divmod(pix, nx)
    ps = field.window.pixel_size
    x = field.window.origin[0] + (ix + rng.random(len(pix))) * ps
    y = field.window.origin[1] + (iy + rng.random(len(pix))) * ps
    return np.column_stack([x, y])


def simulate_planar_horizon(plan, events, window, h, weights=None):
    """Planar counterpart of :func:`~netstpp.simulate.simulate_horizon` (observed counts only).

    Returns a list with one pooled ``(n, 2)`` xy array per replicate.
    """
    if plan.counts_mode != "observed":
        raise ValueError("planar simulation supports counts_mode='observed' only")
    if plan.horizon.min() <= events.T:
        raise ValueError("horizon periods must lie after the training data")
    kde = PlanarKDE(window, h)
    prepared = kde.prepare(events.xy)
    rngs = replicate_generators(plan.seed, plan.replicate_count)
    out = [[] for _ in rngs]
    field = None
    for k, u in enumerate(plan.horizon.tolist()):
        if weights is not None or field is None:
            field = kde.field(prepared, None if weights is None else relative_weights(weights, u - events.period))
        for r, rng in enumerate(rngs):
            out[r].append(sample_planar(field, plan.observed_counts[k], rng))
    return [np.vstack(parts) if parts else np.empty((0, 2)) for parts in out]
