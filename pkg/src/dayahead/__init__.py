"""Day-ahead hourly residential load forecasting with boosted trees and baselines."""

__version__ = "0.1.0"
