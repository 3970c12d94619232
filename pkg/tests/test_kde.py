import numpy as np
import pytest

from netstpp import (
    NetworkKDE,
    NetworkPattern,
    bandwidth_rule,
    build_network,
    intensity_field,
    network_convolution,
    raster_for_bandwidth,
    rasterize,
    weighted_kde,
)
from netstpp.kde import GaussianConvolver
from netstpp.synthetic import random_planar_network, uniform_on_network

from oracles import direct_convolution


def test_bandwidth_rule_arithmetic():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(1000, 2))
    pts = (pts - pts.mean(0)) / pts.std(0, ddof=1) * 1000
    assert bandwidth_rule(pts) == pytest.approx(3000 ** (-0.2) * 1000 * np.sqrt(2))
    assert bandwidth_rule(pts * 3) == pytest.approx(3 * bandwidth_rule(pts))
    assert bandwidth_rule(np.vstack([pts, pts])) == pytest.approx(bandwidth_rule(pts) * 2 ** (-0.2), rel=1e-3)
    with pytest.raises(ValueError, match="degenerate"):
        bandwidth_rule(np.ones((5, 2)))


def test_convolver_matches_direct_sum():
    rng = np.random.default_rng(1)
    img = rng.random((32, 32)) * (rng.random((32, 32)) < 0.3)
    conv = GaussianConvolver((32, 32), 2.0, 5.0)
    assert np.max(np.abs(conv(img) - direct_convolution(img, 2.0, 5.0))) < 1e-10


def test_non_square_grid_matches_direct_sum():
    img = np.random.default_rng(2).random((20, 33))
    conv = GaussianConvolver((20, 33), 1.5, 4.0)
    assert np.max(np.abs(conv(img) - direct_convolution(img, 1.5, 4.0))) < 1e-10


def test_line_convolution_closed_form():
    # a long straight line: c_L on the line is the 1-D Gaussian integral 1/(sqrt(2 pi) h)
    h = 10.0
    net = build_network([(-2000.0, 0.0, 2000.0, 0.0)])
    r = rasterize(net, 800, 80, origin=(-2000.0, -200.0), pixel_size=5.0)
    with pytest.warns(UserWarning, match="margin"):  # line runs off the grid; only the middle is checked
        cl = network_convolution(r, h)
    mid = cl[:, 350:450][r.mass[:, 350:450] > 0]
    assert np.allclose(mid, 1.0 / (np.sqrt(2 * np.pi) * h), rtol=2e-3)


def test_far_from_short_segment_is_negligible():
    net = build_network([(0.0, 0.0, 10.0, 0.0)])
    r = rasterize(net, 200, 200, margin=500.0)
    cl = network_convolution(r, 5.0)
    X, Y = r.pixel_centers()
    far = np.hypot(X - 5, Y) > 200
    assert cl[far].max() < 1e-12


def test_margin_warning():
    net = build_network([(0.0, 0.0, 100.0, 0.0)])
    r = rasterize(net, 64, 64, margin=5.0)
    with pytest.warns(UserWarning, match="margin"):
        network_convolution(r, 20.0)


@pytest.mark.parametrize("sampling", ["nearest", "bilinear"])
def test_single_event_integrates_to_one(sampling):
    h = 8.0
    net = build_network([(0.0, 0.0, 200.0, 0.0)])
    r = raster_for_bandwidth(net, h, resolution=256)
    g = weighted_kde(NetworkPattern(net, [0], [0.3]), None, r, h, cl_sampling=sampling)
    assert g.integral() == pytest.approx(1.0, abs=0.01)
    assert np.argmax(g.values) == r.pixel_index(net.xy(0, 0.3))[0]


def test_integral_on_random_networks():
    for seed in range(5):
        net = random_planar_network(30, 1000.0, rng=seed)
        pts = uniform_on_network(net, 200, seed)
        h = bandwidth_rule(pts.xy)
        r = raster_for_bandwidth(net, h, resolution=200)
        w = np.random.default_rng(seed).random(200)
        assert weighted_kde(pts, w, r, h).integral() == pytest.approx(1.0, abs=1e-9)


def test_weight_identities():
    net = random_planar_network(20, 500.0, rng=3)
    pts = uniform_on_network(net, 50, 3)
    h = 30.0
    kde = NetworkKDE(raster_for_bandwidth(net, h, resolution=128), h)
    base = kde(pts)
    assert np.allclose(kde(pts, np.full(50, 3.7)).values, base.values, rtol=1e-12, atol=1e-18)
    two = pts.take([0, 1])
    assert np.allclose(kde(two, [1.0, 0.0]).values, kde(pts.take([0])).values, rtol=1e-12, atol=1e-18)
    # pooling: union with weights is the weight-sum mixture of the parts
    a, b = pts.take(slice(0, 20)), pts.take(slice(20, 50))
    wa, wb = np.random.default_rng(0).random(20), np.random.default_rng(1).random(30)
    mix = (wa.sum() * kde(a, wa).values + wb.sum() * kde(b, wb).values) / (wa.sum() + wb.sum())
    assert np.allclose(kde(a.concat(b), np.concatenate([wa, wb])).values, mix, rtol=1e-10, atol=1e-18)
    with pytest.raises(ValueError, match="positive"):
        kde(pts, np.zeros(50))


def test_grid_refinement_is_stable():
    net = random_planar_network(20, 800.0, rng=7)
    pts = uniform_on_network(net, 300, 7)
    h = 40.0
    coarse = weighted_kde(pts, None, raster_for_bandwidth(net, h, resolution=128), h)
    fine = weighted_kde(pts, None, raster_for_bandwidth(net, h, resolution=256), h)
    assert abs(coarse.integral() - fine.integral()) < 0.005


def test_outside_support():
    net = build_network([(0.0, 0.0, 10.0, 0.0), (5000.0, 0.0, 5010.0, 0.0)])
    r = rasterize(build_network([(0.0, 0.0, 10.0, 0.0)]), 64, 64, margin=2000.0)
    kde = NetworkKDE(r, 1.0)
    with pytest.raises(ValueError, match="effective network support"):
        kde.prepare(np.array([[1990.0, 1990.0]]))
    del net


def test_intensity_field():
    net = build_network([(0.0, 0.0, 200.0, 0.0)])
    r = raster_for_bandwidth(net, 10.0, resolution=128)
    g = weighted_kde(NetworkPattern(net, [0, 0], [0.2, 0.6]), None, r, 10.0)
    assert np.array_equal(intensity_field(g, 1.0).values, g.values)
    lam = intensity_field(g, 12.5)
    assert np.allclose(intensity_field(g, 25.0).values, 2 * lam.values)
    assert lam.integral() == pytest.approx(12.5, rel=0.01)
    with pytest.raises(ValueError):
        intensity_field(g, 0.0)


def test_exports(tmp_path):
    import json

    import pandas as pd

    net = build_network([(0.0, 0.0, 200.0, 0.0)])
    r = raster_for_bandwidth(net, 10.0, resolution=64)
    g = weighted_kde(NetworkPattern(net, [0], [0.5]), None, r, 10.0)
    g.to_csv(tmp_path / "g.csv")
    df = pd.read_csv(tmp_path / "g.csv")
    assert list(df.columns) == ["x", "y", "density", "mass"]
    assert (df.density * df.mass).sum() == pytest.approx(1.0)
    g.to_geojson(tmp_path / "g.geojson")
    doc = json.loads((tmp_path / "g.geojson").read_text())
    assert len(doc["features"]) == len(r.piece_len)
