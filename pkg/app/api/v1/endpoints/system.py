# app/api/v1/endpoints/system.py
"""
System endpoints: health and version.
"""
import platform
from datetime import datetime, timezone

import numpy as np
import scipy
from fastapi import APIRouter

from app import __version__
from app.core.config import settings

router = APIRouter(prefix="/api/system", tags=["System"])


def _now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


@router.get("/health/", summary="Health Check")
def get_health() -> dict:
    return {"status": "healthy", "timestamp": _now()}


@router.get("/version/", summary="API Version")
def get_version() -> dict:
    """
    Return the application version and the numeric stack it runs on.
    """
    return {
        "app_name": settings.APP_NAME,
        "version": __version__,
        "python_version": platform.python_version(),
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "platform": platform.system(),
        "timestamp": _now(),
    }
