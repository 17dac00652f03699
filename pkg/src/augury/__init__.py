"""Monitoring-data analysis: memory-impulse models, seasonal profiles and forecasts."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AuguryError,
    ConvergenceError,
    DataError,
    DegenerateInputError,
    EmptyInputError,
    EmptySelectionError,
    FormatError,
    InsufficientDataError,
    InvalidParameterError,
    SchemaError,
)
from .kernels import BACKEND  # noqa: E402
from .series import RegularSeries, WeightScheme, difference, ewma, moving_average, series_sigma  # noqa: E402
from .ingestion import (  # noqa: E402
    IngestReport,
    MetricsSample,
    RequestRecord,
    parse_apache_log,
    read_metrics_csv,
    read_records_json,
    to_regular_series,
)
from .seasonal import Decomposition, Period, SeasonalProfile, decompose, seasonal_profile, zoom_profile  # noqa: E402
from .signal_model import (  # noqa: E402
    ModelParams,
    SignalPattern,
    analyse_memory,
    extract_parameters,
    find_patterns,
    optimize_window,
    predict_with_trigger,
    significant_deviations,
)
from .forecasting import (  # noqa: E402
    ADFResult,
    ArimaModel,
    ArimaOrder,
    adf_test,
    fit_arima,
    forecast_rmse,
    iterative_forecast,
    naive_forecast,
)
from .aggregation import accumulated_memory, count_executions, rank_applications, runtime_distribution  # noqa: E402
from .workload_sim import PulseSpec, RequestSchedule, generate_metrics, generate_requests  # noqa: E402
from .render import Snapshot, render_csv, render_svg  # noqa: E402
