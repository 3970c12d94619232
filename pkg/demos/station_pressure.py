#!/usr/bin/env python3
"""Station pressure: which stations will the next week's events lean on?

Four stations sit on the synthetic lattice. Future events are simulated
with Poisson counts from the temporal model, each is assigned to the
station nearest along the streets, and shares are averaged over
replicates. The forecast is then compared with the shares the held-out
week actually produced, the synthetic analogue of a retrospective check of
the most stressed stations.
"""

import numpy as np
from scipy.stats import spearmanr

from netstpp import NetworkPattern, SimulationPlan, StationSet, fit_model, pressure_report, raster_for_bandwidth, snap_points
from netstpp import station_shares
from netstpp.synthetic import lattice_network, make_scenario

net = lattice_network(12, 12, 100.0, holes=[(250, 250, 650, 550), (750, 750, 1150, 1050)])
events = make_scenario(net, 24 * 7 * 9, mean_rate=15.0, rng=1).events
split = 24 * 7 * 8 + 1
train = events.before(split)
doc, _ = fit_model(train)
raster = raster_for_bandwidth(net, doc.bandwidth, resolution=256)

xy = np.array([[200, 1000], [1000, 1000], [200, 200], [1000, 200], [600, 600], [100, 600]], dtype=float)
seg, t, _ = snap_points(net, xy, 50.0)
stations = StationSet(list("ABCDEF"), NetworkPattern(net, seg, t))

plan = SimulationPlan(np.arange(split, split + 168), "poisson", replicate_count=20, seed=11)
rep = pressure_report(plan, train, raster, doc.bandwidth, stations, weights=doc.weights, temporal=doc.temporal)
actual = station_shares([events.in_periods(plan.horizon)], stations).mean_share

print(f"{'station':<9}{'forecast %':>11}{'sd':>7}{'actual %':>10}")
for sid, m, s, a in zip(rep.station_ids, rep.mean_share, rep.std_share, actual):
    print(f"{sid:<9}{m:>11.1f}{s:>7.1f}{a:>10.1f}")

k = 3
top_pred = set(np.array(rep.station_ids)[np.argsort(-rep.mean_share)[:k]])
top_true = set(np.array(rep.station_ids)[np.argsort(-actual)[:k]])
rho = spearmanr(rep.mean_share, actual).statistic
print(f"\ntop-{k} overlap {len(top_pred & top_true)}/{k}, Spearman rank correlation {rho:.2f}")
