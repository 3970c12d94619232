"""Fitted model document: temporal model, lag weights and calendar metadata.

The document is plain JSON so that ``forecast``, ``simulate`` and
``pressure`` runs can reload a fit without refitting.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .ingest import acf_positive, hourly_counts, hourly_covariates
from .kde import NetworkKDE, bandwidth_rule, intensity_field
from .temporal import ALL_TERMS, TemporalModel, fit_temporal, predict_mu
from .weights import WeightModel, fit_weights, relative_weights

__all__ = ["MODEL_FORMAT", "MODEL_VERSION", "ModelDocument", "fit_model", "identifiable_terms", "forecast_period", "load_model"]

MODEL_FORMAT = "netstpp-model"
MODEL_VERSION = 1


@dataclass
class ModelDocument:
    """Everything needed to forecast from a training window.

    ``origin`` is the start of period 1 and ``T`` the number of training
    periods; ``base_year`` and ``week_mode`` reproduce the covariates used
    at fit time.
    """

    temporal: TemporalModel
    weights: WeightModel
    origin: pd.Timestamp
    T: int
    bandwidth: float
    base_year: int
    week_mode: str = "iso"
    meta: dict = field(default_factory=dict)

    def covariates(self, periods):
        return hourly_covariates(self.origin, periods, base_year=self.base_year, week_mode=self.week_mode)

    def predict_mu(self, periods):
        """Expected counts for period indices ``periods``."""
        return predict_mu(self.temporal, self.covariates(np.atleast_1d(periods)))

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "origin": self.origin.isoformat(),
            "T": int(self.T),
            "bandwidth": float(self.bandwidth),
            "base_year": int(self.base_year),
            "week_mode": self.week_mode,
            "temporal": self.temporal.to_dict(),
            "weights": self.weights.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != MODEL_FORMAT:
            raise ValueError("not a model document")
        if int(d.get("version", -1)) != MODEL_VERSION:
            raise ValueError(f"unsupported model document version {d.get('version')!r}")
        return cls(
            temporal=TemporalModel.from_dict(d["temporal"]),
            weights=WeightModel.from_dict(d["weights"]),
            origin=pd.Timestamp(d["origin"]),
            T=int(d["T"]),
            bandwidth=float(d["bandwidth"]),
            base_year=int(d["base_year"]),
            week_mode=d.get("week_mode", "iso"),
            meta=dict(d.get("meta", {})),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def load_model(path):
    path = Path(path)
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
    return ModelDocument.from_dict(d)


def identifiable_terms(cov):
    """Terms estimable from a training window.

    The year slope needs at least two calendar years and the week-of-year
    smooth at least one full year of hours; hour and day-of-week are always
    kept.
    """
    terms = []
    if len(np.unique(cov.year)) > 1:
        terms.append("year")
    terms += ["dow", "hour"]
    if len(cov) >= 8760:
        terms.append("week")
    return tuple(t for t in ALL_TERMS if t in terms)


def fit_model(events, K=10, lags=672, bandwidth=None, week_mode="iso", terms="auto", n_random=9, seed=0):
    """Fit the temporal model and the lag weights to a training :class:`EventSet`.

    ``terms="auto"`` keeps only the terms the window can identify (see
    :func:`identifiable_terms`). Returns the document and a dict of
    wall-clock seconds per stage.
    """
    timings = {}
    t0 = time.perf_counter()
    y = hourly_counts(events)
    cov = hourly_covariates(events.origin, events.T, week_mode=week_mode)
    if terms == "auto":
        terms = identifiable_terms(cov)
    temporal = fit_temporal(y, cov, K=K, terms=tuple(terms))
    timings["temporal"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    target = acf_positive(y, lags)
    weights = fit_weights(target, init=None, n_random=n_random, rng=seed)
    timings["weights"] = time.perf_counter() - t0

    h = bandwidth_rule(events.xy) if bandwidth is None else float(bandwidth)
    doc = ModelDocument(
        temporal=temporal,
        weights=weights,
        origin=events.origin,
        T=events.T,
        bandwidth=h,
        base_year=events.origin.year,
        week_mode=week_mode,
        meta={"n_events": len(events), "lags": int(lags)},
    )
    return doc, timings


def forecast_period(doc, events, raster, u, kde=None, separable=False):
    """Density ``g_u`` and intensity ``mu_u * g_u`` for one future period."""
    if u <= doc.T:
        raise ValueError("period not in the future")
    kde = kde or NetworkKDE(raster, doc.bandwidth)
    w = None if separable else relative_weights(doc.weights, u - events.period)
    g = kde.field(kde.prepare(events.pattern), w)
    mu = float(doc.predict_mu([u])[0])
    return g, intensity_field(g, mu)
