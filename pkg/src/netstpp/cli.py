"""Command-line runs driven by a key-value config file.

Every setting has a default (``netstpp <command> --print-config`` lists
them), can be set in the config file as ``key = value`` and overridden on
the command line as ``--key value``. Each run writes its artifacts plus a
``manifest.json`` (config hash, seed, checksums, stage timings) into the
output directory.

Exit codes: 0 success, 1 internal error, 2 user or configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import platform
import sys
import time
import traceback
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.stats import ks_2samp

from . import __version__
from .ingest import load_events
from .kde import NetworkKDE, bandwidth_rule
from .model import fit_model, forecast_period, load_model
from .net import rasterize, raster_for_bandwidth, read_network
from .planar import PlanarKDE, PlanarWindow, simulate_planar_horizon
from .pressure import read_stations, station_shares
from .simulate import RNG_ALGORITHM, SimulationPlan, simulate_horizon
from .validate import ise_network, mc_random_labelling_test, pooled_bandwidth, relative_risk, rise

COMMANDS = ("fit", "forecast", "simulate", "validate", "pressure", "synth")
PROTOCOLS = ("relrisk", "mctest", "ise-separability", "rise-planar", "pressure")

DEFAULTS = {
    "network": "",
    "network_format": "auto",
    "snap_tolerance": "0.01",
    "events": "",
    "window_start": "",
    "window_end": "",
    "max_snap": "50",
    "split": "",
    "nx": "auto",
    "ny": "auto",
    "resolution": "256",
    "margin_bandwidths": "4",
    "bandwidth": "rule",
    "knots": "10",
    "lags": "672",
    "week_mode": "iso",
    "terms": "auto",
    "weight_starts": "9",
    "horizon": "+1..+24",
    "hours": "",
    "periods": "",
    "counts_mode": "poisson",
    "replicates": "10",
    "permutations": "99",
    "seed": "0",
    "protocol": "relrisk",
    "stations": "",
    "planar_window": "bbox",
    "model": "",
    "output": "out",
    "threads": "1",
}

HELP = {
    "network": "network file (CSV x1,y1,x2,y2 or GeoJSON LineStrings)",
    "events": "event CSV with timestamp,x,y",
    "window_start": "study window start (default: first event hour or model origin)",
    "window_end": "study window end, exclusive (default: hour after the last event)",
    "split": "training/test split timestamp (validate; fit trains on events before it)",
    "nx": "grid columns, or 'auto' to derive from resolution",
    "bandwidth": "'rule' or a value in metres",
    "horizon": "'+a..+b' periods after training, or 'start/end' timestamps",
    "hours": "validate: keep horizon periods at these hours of day, e.g. '22-5' or '7,8,17-19'",
    "periods": "comma-separated forecast periods (overrides horizon for forecast)",
    "counts_mode": "'poisson' (from the temporal model) or 'observed'",
    "replicates": "simulated scenarios per run",
    "permutations": "relabellings per Monte Carlo test",
    "protocol": "validation protocol: " + " | ".join(PROTOCOLS),
    "planar_window": "'bbox' or a GeoJSON polygon file for the planar baseline",
    "threads": "FFT worker cap",
}


class ConfigError(ValueError):
    """Invalid or missing user input; maps to exit code 2."""


class StageError(Exception):
    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


class RunConfig:
    """Resolved key-value settings with typed accessors."""

    def __init__(self, values):
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        self.values = {**DEFAULTS, **values}

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
        try:
            cp.read_string("[run]\n" + path.read_text())
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls(dict(cp["run"]))

    def __getitem__(self, key):
        return self.values[key]

    def text(self, key):
        return self.values[key].strip()

    def path(self, key, must_exist=True):
        p = self.text(key)
        if not p:
            raise ConfigError(f"config key {key!r} is required")
        p = Path(p)
        if must_exist and not p.exists():
            raise ConfigError(f"{key}: file not found: {p}")
        return p

    def number(self, key, kind=float, lo=None, hi=None):
        try:
            v = kind(self.text(key))
        except ValueError:
            raise ConfigError(f"{key}: expected {kind.__name__}, got {self[key]!r}") from None
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ConfigError(f"{key}={v} outside [{lo}, {hi}]")
        return v

    def dump(self):
        return "".join(f"{k} = {self.values[k]}\n" for k in DEFAULTS)

    def digest(self):
        # the output location does not change results
        vals = {k: v for k, v in self.values.items() if k != "output"}
        return hashlib.sha256(json.dumps(vals, sort_keys=True).encode()).hexdigest()


def parse_horizon(spec, origin, T):
    """Period indices for ``'+a..+b'`` (relative to ``T``) or ``'start/end'`` timestamps."""
    spec = spec.strip()
    if spec.startswith("+"):
        try:
            a, b = (int(s.strip().lstrip("+")) for s in spec.split(".."))
        except ValueError:
            raise ConfigError(f"bad horizon {spec!r}; expected '+a..+b'") from None
        if a < 1 or b < a:
            raise ConfigError(f"bad horizon {spec!r}")
        return np.arange(T + a, T + b + 1)
    if "/" in spec:
        start, end = (pd.Timestamp(s.strip()) for s in spec.split("/"))
        first = int((start - origin) // pd.Timedelta(hours=1)) + 1
        last = int((end - origin) // pd.Timedelta(hours=1))
        if last < first:
            raise ConfigError(f"empty horizon {spec!r}")
        return np.arange(first, last + 1)
    raise ConfigError(f"bad horizon {spec!r}")


def parse_hours(spec):
    """Hours of day from ``'a-b'`` ranges (wrapping past midnight) and single values."""
    hours = set()
    for part in filter(None, (p.strip() for p in spec.split(","))):
        try:
            a, _, b = part.partition("-")
            a, b = int(a), int(b or a)
        except ValueError:
            raise ConfigError(f"bad hours {spec!r}") from None
        if not (0 <= a < 24 and 0 <= b < 24):
            raise ConfigError(f"bad hours {spec!r}: values must lie in 0..23")
        hours.update(range(a, b + 1) if a <= b else [*range(a, 24), *range(0, b + 1)])
    return np.array(sorted(hours))


# --------------------------------------------------------------------------
# run bookkeeping
# --------------------------------------------------------------------------


class Run:
    """Output directory, stage timings and manifest for one command."""

    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg.text("output") or "out")
        self.out.mkdir(parents=True, exist_ok=True)
        self.timings = {}
        self.artifacts = []
        self.seed = cfg.number("seed", int, 0)
        self.threads = cfg.number("threads", int, 1)

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        except (ConfigError, StageError):
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def path(self, name):
        self.artifacts.append(name)
        return self.out / name

    def write_json(self, name, obj):
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=1, default=_jsonable)

    def finish(self, extra=None):
        files = {}
        for name in dict.fromkeys(self.artifacts):
            files[name] = hashlib.sha256((self.out / name).read_bytes()).hexdigest()
        manifest = {
            "command": self.command,
            "version": __version__,
            "config": self.cfg.values,
            "config_hash": self.cfg.digest(),
            "seed": self.seed,
            "rng": RNG_ALGORITHM,
            "artifacts": files,
            "timings_seconds": self.timings,
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        if extra:
            manifest.update(extra)
        with open(self.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, default=_jsonable)
        return manifest


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, pd.Timestamp):
        return o.isoformat()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


# --------------------------------------------------------------------------
# shared stages
# --------------------------------------------------------------------------


def _network(run):
    cfg = run.cfg
    with run.stage("network"):
        return read_network(
            cfg.path("network"), cfg.text("network_format"), snap_tolerance=cfg.number("snap_tolerance", float, 0)
        )


def _events(run, net, start=None, end=None):
    cfg = run.cfg
    path = cfg.path("events")
    start = cfg.text("window_start") or start
    end = cfg.text("window_end") or end
    window = None
    if start or end:
        if not (start and end):
            raise ConfigError("window_start and window_end must be given together")
        window = (pd.Timestamp(start), pd.Timestamp(end))
    with run.stage("ingest"):
        ev, rep = load_events(path, net, max_snap=cfg.number("max_snap", float, 0), window=window)
        rep.to_csv(run.path("rejections.csv"))
    if len(ev) == 0:
        raise ConfigError(f"{path}: no events inside the window")
    return ev, rep


def _split_period(cfg, ev):
    s = cfg.text("split")
    if not s:
        return None
    u = ev.period_of(s)
    if not 1 < u <= ev.T:
        raise ConfigError(f"split {s} outside the event window")
    return u


def _bandwidth(cfg, events):
    b = cfg.text("bandwidth")
    return bandwidth_rule(events.xy) if b == "rule" else cfg.number("bandwidth", float, 1e-9)


def _raster(run, net, h):
    cfg = run.cfg
    with run.stage("raster"):
        margin = cfg.number("margin_bandwidths", float, 0) * h
        if cfg.text("nx") == "auto" or cfg.text("ny") == "auto":
            res = cfg.number("resolution", int, 4, 1 << 14)
            return raster_for_bandwidth(net, h, res, cfg.number("margin_bandwidths", float, 0))
        return rasterize(net, cfg.number("nx", int, 1), cfg.number("ny", int, 1), margin=margin)


def _model_and_training(run, net):
    """Load the model document and re-read its training events."""
    doc = load_model(run.cfg.path("model"))
    end = doc.origin + pd.Timedelta(hours=doc.T)
    ev, _ = _events(run, net, start=str(doc.origin), end=None if run.cfg.text("window_end") else str(end))
    if ev.origin != doc.origin:
        raise ConfigError(f"event window starts {ev.origin}, model origin is {doc.origin}")
    if ev.T < doc.T:
        raise ConfigError("event window shorter than the model's training window")
    return doc, ev, ev.before(doc.T + 1)


def _plan(cfg, horizon, ev=None):
    mode = cfg.text("counts_mode")
    counts = None
    if mode == "observed":
        if ev is None or horizon.max() > ev.T:
            raise ConfigError("counts_mode=observed needs events covering the horizon")
        counts = np.bincount(ev.period, minlength=ev.T + 1)[horizon]
    try:
        return SimulationPlan(horizon, mode, cfg.number("replicates", int, 1), cfg.number("seed", int, 0), counts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_fit(run):
    cfg = run.cfg
    net = _network(run)
    ev, rep = _events(run, net)
    u = _split_period(cfg, ev)
    train = ev if u is None else ev.before(u)
    terms = cfg.text("terms")
    terms = "auto" if terms == "auto" else tuple(t.strip() for t in terms.split(","))
    with run.stage("fit"):
        doc, tm = fit_model(
            train,
            K=cfg.number("knots", int, 4),
            lags=cfg.number("lags", int, 168),
            bandwidth=None if cfg.text("bandwidth") == "rule" else cfg.number("bandwidth", float, 1e-9),
            week_mode=cfg.text("week_mode"),
            terms=terms,
            n_random=cfg.number("weight_starts", int, 0),
            seed=run.seed,
        )
    run.timings.update({f"fit.{k}": v for k, v in tm.items()})
    with run.stage("kde"):
        # one-period spatial kernel, for the timing record
        raster = _raster(run, net, doc.bandwidth)
        forecast_period(doc, train, raster, doc.T + 1, kde=NetworkKDE(raster, doc.bandwidth, workers=run.threads))
    doc.meta.update({"network": str(cfg.path("network")), "events": str(cfg.path("events"))})
    doc.save(run.path("model.json"))
    report = {
        "n_events": len(train),
        "n_rejected": len(rep.rows),
        "T": train.T,
        "terms": list(doc.temporal.terms),
        "deviance": doc.temporal.deviance,
        "iterations": doc.temporal.iterations,
        "deviance_trace": doc.temporal.deviance_trace,
        "weights_rho": doc.weights.rho,
        "weights_loss": doc.weights.loss,
        "bandwidth": doc.bandwidth,
        "timings_seconds": run.timings,
    }
    run.write_json("fit_report.json", report)
    return report


def _periods(cfg, doc):
    if cfg.text("periods"):
        try:
            return np.array([int(p) for p in cfg.text("periods").split(",")])
        except ValueError:
            raise ConfigError(f"bad periods {cfg['periods']!r}") from None
    return parse_horizon(cfg.text("horizon"), doc.origin, doc.T)


def cmd_forecast(run):
    cfg = run.cfg
    net = _network(run)
    doc, _, train = _model_and_training(run, net)
    periods = _periods(cfg, doc)
    if periods.min() <= doc.T:
        raise ConfigError("period not in the future")
    raster = _raster(run, net, doc.bandwidth)
    kde = NetworkKDE(raster, doc.bandwidth, workers=run.threads)
    rows = []
    for u in periods.tolist():
        with run.stage("kde"):
            g, lam = forecast_period(doc, train, raster, u, kde=kde)
        with run.stage("export"):
            g.to_csv(run.path(f"density_{u}.csv"))
            g.to_geojson(run.path(f"density_{u}.geojson"))
            lam.to_csv(run.path(f"intensity_{u}.csv"))
        rows.append({"period": u, "start": str(train.period_start(u)), "mu": lam.mu, "integral": g.integral()})
    pd.DataFrame(rows).to_csv(run.path("forecast_summary.csv"), index=False)
    return rows


def cmd_simulate(run):
    cfg = run.cfg
    net = _network(run)
    doc, ev, train = _model_and_training(run, net)
    horizon = _periods(cfg, doc)
    plan = _plan(cfg, horizon, ev)
    raster = _raster(run, net, doc.bandwidth)
    with run.stage("simulate"):
        kde = NetworkKDE(raster, doc.bandwidth, workers=run.threads)
        sim = simulate_horizon(plan, train, raster, doc.bandwidth, doc.weights, doc.temporal, kde=kde)
    with run.stage("export"):
        frame = sim.to_frame()
        for r in range(plan.replicate_count):
            frame[frame.replicate == r].to_csv(run.path(f"simulation_{r}.csv"), index=False)
    return {"events": len(frame), "replicates": plan.replicate_count}


def cmd_pressure(run):
    cfg = run.cfg
    net = _network(run)
    doc, ev, train = _model_and_training(run, net)
    stations = read_stations(cfg.path("stations"), net, max_snap=cfg.number("max_snap", float, 0))
    plan = _plan(cfg, _periods(cfg, doc), ev)
    raster = _raster(run, net, doc.bandwidth)
    with run.stage("simulate"):
        kde = NetworkKDE(raster, doc.bandwidth, workers=run.threads)
        sim = simulate_horizon(plan, train, raster, doc.bandwidth, doc.weights, doc.temporal, kde=kde)
    with run.stage("pressure"):
        rep = station_shares([sim.pooled(r) for r in range(plan.replicate_count)], stations)
    rep.to_csv(run.path("pressure.csv"))
    return rep.to_frame().to_dict(orient="list")


def cmd_validate(run):
    cfg = run.cfg
    protocol = cfg.text("protocol")
    if protocol not in PROTOCOLS:
        raise ConfigError(f"unknown protocol {protocol!r}; valid options: {', '.join(PROTOCOLS)}")
    net = _network(run)
    ev, _ = _events(run, net)
    u = _split_period(cfg, ev)
    if u is None:
        raise ConfigError("validate needs a train/test split (config key 'split')")
    train = ev.before(u)
    with run.stage("fit"):
        if cfg.text("model"):
            doc = load_model(cfg.path("model"))
            if doc.T != train.T or doc.origin != train.origin:
                raise ConfigError("model was not fitted on the configured training window")
        else:
            doc, tm = fit_model(
                train,
                K=cfg.number("knots", int, 4),
                lags=cfg.number("lags", int, 168),
                bandwidth=None if cfg.text("bandwidth") == "rule" else cfg.number("bandwidth", float, 1e-9),
                week_mode=cfg.text("week_mode"),
                n_random=cfg.number("weight_starts", int, 0),
                seed=run.seed,
            )
    horizon = parse_horizon(cfg.text("horizon"), ev.origin, train.T)
    if horizon.max() > ev.T:
        raise ConfigError("test horizon extends past the event window")
    if cfg.text("hours"):
        hour = pd.DatetimeIndex(ev.period_start(horizon)).hour
        horizon = horizon[np.isin(hour, parse_hours(cfg.text("hours")))]
        if len(horizon) == 0:
            raise ConfigError("no horizon periods at the selected hours")
    counts = np.bincount(ev.period, minlength=ev.T + 1)[horizon]
    obs = ev.in_periods(horizon)
    if len(obs) == 0:
        raise ConfigError("no observed events in the test horizon")
    plan = SimulationPlan(horizon, "observed", cfg.number("replicates", int, 1), run.seed, counts)
    h = doc.bandwidth
    # the grid must also carry the (wider) comparison bandwidths
    raster = _raster(run, net, max(h, bandwidth_rule(obs.xy)))
    kde = NetworkKDE(raster, h, workers=run.threads)
    with run.stage("simulate"):
        sim = simulate_horizon(plan, train, raster, h, doc.weights, kde=kde)
    R = plan.replicate_count
    preds = [sim.pooled(r) for r in range(R)]
    summary = {"protocol": protocol, "replicates": R, "n_observed": len(obs), "periods": [int(horizon[0]), int(horizon[-1])], "n_periods": len(horizon)}

    with run.stage("validate"):
        if protocol == "relrisk":
            rows = []
            for r, p in enumerate(preds):
                rr = relative_risk(obs, p, raster)
                rows.append({"replicate": r, "fraction_0.4_0.6": rr.fraction_within(), "bandwidth": rr.bandwidth_common})
                if r == 0:
                    _export_relrisk(run, rr)
            stats = pd.DataFrame(rows)
            summary["fraction_0.4_0.6"] = _describe(stats["fraction_0.4_0.6"])
        elif protocol == "mctest":
            rows = []
            for r, p in enumerate(preds):
                res = mc_random_labelling_test(
                    obs, p, raster, n_perm=cfg.number("permutations", int, 19), rng=np.random.SeedSequence([run.seed, r])
                )
                rows.append({"replicate": r, "t_obs": res.t_obs, "p_value": res.p_value, "masked_mass": res.masked_mass_fraction})
            stats = pd.DataFrame(rows)
            summary["p_value"] = _describe(stats["p_value"])
            summary["rejections_0.05"] = int((stats["p_value"] <= 0.05).sum())
        elif protocol == "ise-separability":
            sep = simulate_horizon(plan, train, raster, h, None, kde=kde)
            rows = []
            for r in range(R):
                rows.append(
                    {
                        "replicate": r,
                        "ise_nonseparable": ise_network(preds[r], obs, raster, kde=kde),
                        "ise_separable": ise_network(sep.pooled(r), obs, raster, kde=kde),
                    }
                )
            stats = pd.DataFrame(rows)
            ks = ks_2samp(stats["ise_nonseparable"], stats["ise_separable"], method="asymp")
            summary.update(
                ise_nonseparable=_describe(stats["ise_nonseparable"]),
                ise_separable=_describe(stats["ise_separable"]),
                ks_statistic=float(ks.statistic),
                ks_p_value=float(ks.pvalue),
            )
        elif protocol == "rise-planar":
            window = _planar_window(cfg, raster)
            psim = simulate_planar_horizon(plan, train, window, h, weights=doc.weights)
            rows = []
            for r in range(R):
                hn = pooled_bandwidth(preds[r], obs)
                nk = NetworkKDE(raster, hn, workers=run.threads)
                rn = rise(nk(preds[r]), nk(obs))
                pk = PlanarKDE(window, pooled_bandwidth(psim[r], obs.xy), workers=run.threads)
                rp = rise(pk(psim[r]), pk(obs.xy))
                rows.append(
                    {
                        "replicate": r,
                        "rise_network": rn.value,
                        "rise_planar": rp.value,
                        "excluded_network": rn.excluded_fraction,
                        "excluded_planar": rp.excluded_fraction,
                    }
                )
            stats = pd.DataFrame(rows)
            summary.update(rise_network=_describe(stats["rise_network"]), rise_planar=_describe(stats["rise_planar"]))
        else:  # pressure
            stations = read_stations(cfg.path("stations"), net, max_snap=cfg.number("max_snap", float, 0))
            rep = station_shares(preds, stations)
            observed = station_shares([obs], stations)
            stats = rep.to_frame().assign(observed_share=observed.mean_share)
            summary["max_abs_share_gap"] = float(np.max(np.abs(rep.mean_share - observed.mean_share)))
    stats.to_csv(run.path("statistics.csv"), index=False)
    run.write_json("summary.json", summary)
    return summary


def _planar_window(cfg, raster):
    spec = cfg.text("planar_window")
    if spec == "bbox":
        return PlanarWindow.from_raster(raster)
    import shapely

    path = cfg.path("planar_window")
    geom = shapely.from_geojson(path.read_text())
    if hasattr(geom, "geoms") and geom.geom_type == "GeometryCollection":
        geom = shapely.union_all(list(geom.geoms))
    return PlanarWindow.from_raster(raster, polygon=geom)


def _export_relrisk(run, rr):
    X, Y = rr.raster.pixel_centers()
    ok = rr.defined
    pd.DataFrame({"x": X[ok], "y": Y[ok], "relative_risk": rr.values[ok], "mass": rr.raster.mass[ok]}).to_csv(
        run.path("relative_risk.csv"), index=False
    )


def _describe(s):
    s = np.asarray(s, dtype=float)
    q = np.quantile(s, [0.05, 0.25, 0.5, 0.75, 0.95])
    return {"mean": float(s.mean()), "q05": q[0], "q25": q[1], "median": q[2], "q75": q[3], "q95": q[4]}


def cmd_synth(run):
    """Write a small synthetic dataset (network, events, stations, config)."""
    from .synthetic import lattice_network, make_scenario

    net = lattice_network(12, 12, 100.0, holes=[(250, 250, 650, 550), (750, 750, 1150, 1050)])
    weeks = 10
    scen = make_scenario(net, 24 * 7 * weeks, mean_rate=15.0, rng=run.seed)
    segs = net.segment_array()
    pd.DataFrame(segs, columns=["x1", "y1", "x2", "y2"]).to_csv(run.path("network.csv"), index=False)
    scen.frame(run.seed).to_csv(run.path("events.csv"), index=False)
    pd.DataFrame({"id": ["A", "B", "C", "D"], "x": [200, 1000, 200, 1000], "y": [1000, 1000, 200, 200]}).to_csv(
        run.path("stations.csv"), index=False
    )
    start = pd.Timestamp("2017-01-02 00:00")
    split = start + pd.Timedelta(weeks=8)
    text = (
        f"network = {run.out / 'network.csv'}\n"
        f"events = {run.out / 'events.csv'}\n"
        f"stations = {run.out / 'stations.csv'}\n"
        f"window_start = {start:%Y-%m-%d %H:%M}\n"
        f"window_end = {start + pd.Timedelta(weeks=weeks):%Y-%m-%d %H:%M}\n"
        f"split = {split:%Y-%m-%d %H:%M}\n"
        "resolution = 128\n"
        "horizon = +1..+168\n"
    )
    run.path("run.cfg").write_text(text)
    return {"events": len(scen.events), "segments": net.n_segments}


COMMAND_HELP = {
    "fit": "fit the temporal model and lag weights; writes model.json",
    "forecast": "density and intensity fields for future periods",
    "simulate": "simulate future point patterns",
    "validate": "run a validation protocol on a train/test split",
    "pressure": "station pressure shares from simulated events",
    "synth": "write a small synthetic dataset with a ready config",
}

HANDLERS = {
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "pressure": cmd_pressure,
    "synth": cmd_synth,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="netstpp", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"netstpp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=COMMAND_HELP[name])
        sp.add_argument("-c", "--config", help="key = value config file")
        sp.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
        for key, default in DEFAULTS.items():
            sp.add_argument(
                "--" + key.replace("_", "-"), dest=key, default=None, metavar="V", help=f"{HELP.get(key, key)} [{default}]"
            )
    return p


def resolve_config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig({})
    overrides = {k: getattr(args, k) for k in DEFAULTS if getattr(args, k, None) is not None}
    return RunConfig({**{k: v for k, v in cfg.values.items() if v != DEFAULTS[k]}, **overrides})


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(cfg.dump())
            return 0
        run = Run(args.command, cfg)
        result = HANDLERS[args.command](run)
        run.finish()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        user = isinstance(exc.cause, (ValueError, FileNotFoundError, KeyError))
        if not user:
            traceback.print_exception(exc.cause)
        return 2 if user else 1
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return 1
    print(json.dumps({"command": args.command, "output": str(run.out), "result": result}, default=_jsonable)[:2000])
    return 0


if __name__ == "__main__":
    sys.exit(main())
