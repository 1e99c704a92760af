"""Two-user Gaussian MAC with variable-length feedback: bounds, renewal constants and a stop-feedback simulator."""
from .channel import (
    ChannelParams,
    InfoDensityTriple,
    SingleLetterStats,
    binary_entropy,
    gaussian_capacity,
    info_density_mismatched,
    sample_channel,
    single_letter_stats,
)

__all__ = [
    "ChannelParams",
    "InfoDensityTriple",
    "SingleLetterStats",
    "binary_entropy",
    "gaussian_capacity",
    "info_density_mismatched",
    "sample_channel",
    "single_letter_stats",
]
__version__ = "0.1.0"
