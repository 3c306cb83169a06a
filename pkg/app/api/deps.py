# app/api/deps.py
from fastapi import Depends, HTTPException, status

from app.core.config import Settings, get_settings
from app.core.exceptions import RaydiffError
from app.schemas.metric import MetricConfig


def get_default_metric_config(settings: Settings = Depends(get_settings)) -> MetricConfig:
    """Metric configuration used when a request does not carry its own."""
    return MetricConfig.from_settings(settings)


def unprocessable(exc: RaydiffError) -> HTTPException:
    return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
