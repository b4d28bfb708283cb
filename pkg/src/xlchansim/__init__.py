"""Drop-based XL-MIMO channel simulator with near-field and spatial non-stationarity extensions."""

from .config import SimulationConfig, load_config, parse_features, scenario_params
from .geometry import ArrayGeometry, FieldPattern
from .metrics import MetricSample, PathLossModel, aggregate_cdf, capacity, coupling_loss
from .simulation import run_drop, run_drop_loop, simulate
from .synthesis import ChannelRealization, DropConfig, assemble_cir

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "ChannelRealization",
    "DropConfig",
    "FieldPattern",
    "MetricSample",
    "PathLossModel",
    "SimulationConfig",
    "aggregate_cdf",
    "assemble_cir",
    "capacity",
    "coupling_loss",
    "load_config",
    "parse_features",
    "run_drop",
    "run_drop_loop",
    "scenario_params",
    "simulate",
]
