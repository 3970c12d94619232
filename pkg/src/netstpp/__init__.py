"""Non-separable spatio-temporal point-process modelling of events on road networks.

Hourly counts are modelled with a Poisson additive model, spatial densities
with an edge-corrected Gaussian kernel on the network whose data weights
decay with a seasonal lag function fitted to the count autocorrelation.
"""

from .ingest import EventSet, RejectionReport, acf, acf_positive, hourly_counts, hourly_covariates, load_events
from .kde import DensityField, IntensityField, NetworkKDE, bandwidth_rule, intensity_field, network_convolution, weighted_kde
from .model import ModelDocument, fit_model, forecast_period, load_model
from .net import (
    LinearNetwork,
    NetworkLocation,
    NetworkPattern,
    NetworkRaster,
    Segment,
    UnreachableError,
    build_network,
    raster_for_bandwidth,
    rasterize,
    read_network,
    shortest_path_distance,
    snap_point,
    snap_points,
)
from .planar import PlanarDensityField, PlanarKDE, PlanarWindow, planar_kde, sample_planar, simulate_planar_horizon
from .pressure import PressureReport, StationAssigner, StationSet, pressure_report, read_stations, station_shares
from .simulate import SimulationPlan, SimulationResult, sample_points, simulate_horizon
from .temporal import CyclicSplineBasis, FitError, TemporalModel, build_cyclic_basis, fit_temporal, predict_mu
from .validate import ise_network, mc_random_labelling_test, relative_risk, rise
from .weights import WeightModel, fit_weights, weight, weights_for_horizon

__version__ = "0.1.0"

__all__ = [
    "EventSet",
    "RejectionReport",
    "acf",
    "acf_positive",
    "hourly_counts",
    "hourly_covariates",
    "load_events",
    "DensityField",
    "IntensityField",
    "NetworkKDE",
    "bandwidth_rule",
    "intensity_field",
    "network_convolution",
    "weighted_kde",
    "ModelDocument",
    "fit_model",
    "forecast_period",
    "load_model",
    "LinearNetwork",
    "NetworkLocation",
    "NetworkPattern",
    "NetworkRaster",
    "Segment",
    "UnreachableError",
    "build_network",
    "raster_for_bandwidth",
    "rasterize",
    "read_network",
    "shortest_path_distance",
    "snap_point",
    "snap_points",
    "PlanarDensityField",
    "PlanarKDE",
    "PlanarWindow",
    "planar_kde",
    "sample_planar",
    "simulate_planar_horizon",
    "PressureReport",
    "StationAssigner",
    "StationSet",
    "pressure_report",
    "read_stations",
    "station_shares",
    "SimulationPlan",
    "SimulationResult",
    "sample_points",
    "simulate_horizon",
    "CyclicSplineBasis",
    "FitError",
    "TemporalModel",
    "build_cyclic_basis",
    "fit_temporal",
    "predict_mu",
    "ise_network",
    "mc_random_labelling_test",
    "relative_risk",
    "rise",
    "WeightModel",
    "fit_weights",
    "weight",
    "weights_for_horizon",
]
