import networkx as nx
import numpy as np
import pytest

from netstpp import (
    EventSet,
    NetworkPattern,
    SimulationPlan,
    StationAssigner,
    StationSet,
    UnreachableError,
    build_network,
    pressure_report,
    raster_for_bandwidth,
    read_stations,
    station_shares,
)
from netstpp.pressure import assign_nearest_station
from netstpp.synthetic import random_planar_network, uniform_on_network

from oracles import nx_split_graph


def brute_force_assign(net, events, stations):
    """All-pairs Dijkstra on an explicit split graph, ties to the lowest id."""
    seg = np.concatenate([events.segment_id, stations.pattern.segment_id])
    t = np.concatenate([events.t, stations.pattern.t])
    g = nx_split_graph(net, seg, t)
    n = len(events)
    best = []
    for i in range(n):
        d = nx.single_source_dijkstra_path_length(g, ("x", i))
        cand = [(d.get(("x", n + k), np.inf), sid) for k, sid in enumerate(stations.ids)]
        best.append(min(cand)[1])
    return best


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_matches_brute_force(seed):
    net = random_planar_network(50, 1000.0, rng=seed)
    stations = StationSet(list(range(5)), uniform_on_network(net, 5, seed + 100))
    events = uniform_on_network(net, 20, seed + 200)
    got = StationAssigner(net, stations).assign_ids(events)
    assert got == brute_force_assign(net, events, stations)


def test_events_sharing_station_segments():
    net = random_planar_network(30, 600.0, rng=4)
    rng = np.random.default_rng(4)
    st_seg = rng.integers(0, net.n_segments, 4)
    stations = StationSet(list("abcd"), NetworkPattern(net, st_seg, rng.random(4)))
    # half the events on station segments, so the on-segment refinement is exercised
    ev = NetworkPattern(net, np.concatenate([np.repeat(st_seg, 5), rng.integers(0, net.n_segments, 20)]), rng.random(40))
    assert StationAssigner(net, stations).assign_ids(ev) == brute_force_assign(net, ev, stations)


def test_single_station():
    net = random_planar_network(20, 500.0, rng=5)
    st = StationSet(["only"], uniform_on_network(net, 1, 0))
    ev = uniform_on_network(net, 30, 1)
    assert set(StationAssigner(net, st).assign_ids(ev)) == {"only"}


def test_tie_goes_to_lowest_id():
    net = build_network([(0.0, 0.0, 100.0, 0.0)])
    st = StationSet([7, 3], NetworkPattern(net, [0, 0], [1.0, 0.0]))
    assert assign_nearest_station(net, net.location(0, 0.5), st) == 3


def test_order_invariance_and_voronoi_midpoints():
    # path graph with stations at x = 0, 300, 1000: boundaries at 150 and 650
    net = build_network([(0.0, 0.0, 400.0, 0.0), (400.0, 0.0, 1000.0, 0.0)])
    locs = [net.location(0, 1.0), net.location(0, 0.25), net.location(1, 0.0)]
    a = StationSet.from_locations(net, ["s0", "s1", "s2"], locs)
    b = StationSet.from_locations(net, ["s2", "s0", "s1"], [locs[2], locs[0], locs[1]])
    xs = np.array([10.0, 149.0, 151.0, 649.0, 651.0, 999.0])
    seg = (xs > 400).astype(int)
    t = np.where(seg == 0, 1 - xs / 400, 1 - (xs - 400) / 600)
    ev = NetworkPattern(net, seg, t)
    want = ["s0", "s0", "s1", "s1", "s2", "s2"]
    assert StationAssigner(net, a).assign_ids(ev) == want
    assert StationAssigner(net, b).assign_ids(ev) == want


def test_unreachable():
    net = build_network([(0.0, 0.0, 1.0, 0.0), (5.0, 5.0, 6.0, 5.0)])
    st = StationSet(["a"], NetworkPattern(net, [0], [0.5]))
    with pytest.raises(UnreachableError):
        StationAssigner(net, st).assign(NetworkPattern(net, [1], [0.5]))


def test_shares_symmetric_line():
    net = build_network([(0.0, 0.0, 1000.0, 0.0)])
    st = StationSet(["A", "B"], NetworkPattern(net, [0, 0], [1.0, 0.0]))
    ev = uniform_on_network(net, 10_000, 3)
    rep = station_shares([ev], st)
    sigma = 100 * np.sqrt(0.25 / 10_000)
    assert abs(rep.mean_share[0] - 50) < 3 * sigma
    assert rep.shares.sum() == pytest.approx(100.0)


def test_one_catchment_and_empty_replicate():
    net = build_network([(0.0, 0.0, 1000.0, 0.0)])
    st = StationSet(["A", "B"], NetworkPattern(net, [0, 0], [1.0, 0.0]))
    near_a = NetworkPattern(net, np.zeros(50, int), np.random.default_rng(0).uniform(0.6, 1.0, 50))
    with pytest.warns(UserWarning, match="zero events"):
        rep = station_shares([near_a, near_a.take([])], st)
    assert rep.skipped == 1
    assert rep.mean_share.tolist() == [100.0, 0.0]
    assert list(rep.to_frame().columns) == ["station_id", "mean_share", "std_share"]


def test_read_stations(tmp_path):
    net = build_network([(0.0, 0.0, 1000.0, 0.0)])
    (tmp_path / "s.csv").write_text("id,x,y\nA,0,10\nB,1000,-5\n")
    st = read_stations(tmp_path / "s.csv", net)
    assert st.ids == ["A", "B"] and np.allclose(st.pattern.xy, [[0, 0], [1000, 0]])
    (tmp_path / "far.csv").write_text("id,x,y\nA,0,10\nC,500,80\n")
    with pytest.raises(ValueError, match=r"\['C'\]"):
        read_stations(tmp_path / "far.csv", net)
    with pytest.raises(ValueError, match="unique"):
        StationSet(["A", "A"], NetworkPattern(net, [0, 0], [0.1, 0.2]))


def test_pressure_report_end_to_end():
    net = build_network([(0.0, 0.0, 1000.0, 0.0)])
    ev = EventSet(uniform_on_network(net, 200, 0), np.random.default_rng(0).integers(1, 169, 200), 168, "2017-01-02")
    st = StationSet(["A", "B"], NetworkPattern(net, [0, 0], [1.0, 0.0]))
    r = raster_for_bandwidth(net, 50.0, resolution=128)
    plan = SimulationPlan(np.arange(169, 193), "observed", replicate_count=4, seed=2, observed_counts=np.full(24, 20))
    rep = pressure_report(plan, ev, r, 50.0, st)
    assert rep.replicate_count == 4
    assert np.allclose(rep.shares.sum(axis=1), 100.0)
    assert np.all(rep.std_share > 0)
