from skyoff.forecast.baselines import baseline_forecast, linear_ar, persistence, rmse
from skyoff.forecast.model import (
    ForecastConfig,
    LoadSeries,
    LstmModel,
    init_model,
    lstm_step,
    model_from_json,
    model_to_json,
    series_from_csv,
    series_to_csv,
    validate_series,
    zero_state,
)
from skyoff.forecast.split import split_by_forecast
from skyoff.forecast.train import TrainResult, forecast, gradient_check, train

__all__ = [
    "ForecastConfig",
    "LoadSeries",
    "LstmModel",
    "TrainResult",
    "baseline_forecast",
    "forecast",
    "gradient_check",
    "init_model",
    "linear_ar",
    "lstm_step",
    "model_from_json",
    "model_to_json",
    "persistence",
    "rmse",
    "series_from_csv",
    "series_to_csv",
    "split_by_forecast",
    "train",
    "validate_series",
    "zero_state",
]
