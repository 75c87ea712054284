from .logger import Logger, NoOpLogger, get_default_logger
from .moments import PowerMeanEstimate, estimate_power_mean, power_mean
from .streams import child_seed, stream

__all__ = [
    "Logger",
    "NoOpLogger",
    "PowerMeanEstimate",
    "child_seed",
    "estimate_power_mean",
    "get_default_logger",
    "power_mean",
    "stream",
]
