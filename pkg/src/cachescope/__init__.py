"""cachescope: federated storage-cache simulation, analytics, and forecasting.

Simulates a regional cache federation over synthetic or ingested access
traces, computes the daily/weekly utilization metrics (hit/miss volumes,
traffic reduction, same-day reuse), forecasts next-day utilization with
a from-scratch LSTM, and detects seasonality with periodograms.
"""

__version__ = "0.1.0"

from .federation import (
    FederationEvent,
    FederationState,
    NodeSpec,
    add_nodes,
    build_federation,
    evict_lru,
    handle_request,
    locate,
    run_simulation,
    select_miss_target,
    socal_preset,
)
from .features import FEATURE_NAMES, Normalizer, encode_day_of_week, make_windows
from .forecast import EvalReport, evaluate_model, grid_search, prepare_dataset
from .lstm import ForecastModel, HyperParams, gradient_check, load_model, save_model, train_model
from .metrics import (
    DailySummary,
    aggregate,
    average_access_size,
    moving_average,
    net_traffic_reduction,
    reuse_metrics,
    rollup_monthly,
    traffic_demand_reduction_rate,
)
from .records import AccessKind, AccessRecord, FileRequest, parse_record, serialize_record
from .seasonality import PeriodogramPoint, detect_peaks, periodogram
from .workload import RegimeShift, WorkloadConfig, generate_workload

__all__ = [
    "AccessKind",
    "AccessRecord",
    "DailySummary",
    "EvalReport",
    "FEATURE_NAMES",
    "FederationEvent",
    "FederationState",
    "FileRequest",
    "ForecastModel",
    "HyperParams",
    "NodeSpec",
    "Normalizer",
    "PeriodogramPoint",
    "RegimeShift",
    "WorkloadConfig",
    "add_nodes",
    "aggregate",
    "average_access_size",
    "build_federation",
    "detect_peaks",
    "encode_day_of_week",
    "evaluate_model",
    "evict_lru",
    "generate_workload",
    "gradient_check",
    "grid_search",
    "handle_request",
    "load_model",
    "locate",
    "make_windows",
    "moving_average",
    "net_traffic_reduction",
    "parse_record",
    "periodogram",
    "prepare_dataset",
    "reuse_metrics",
    "rollup_monthly",
    "run_simulation",
    "save_model",
    "select_miss_target",
    "serialize_record",
    "socal_preset",
    "traffic_demand_reduction_rate",
    "train_model",
]
