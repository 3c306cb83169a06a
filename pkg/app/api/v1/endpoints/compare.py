# app/api/v1/endpoints/compare.py
import logging
from typing import Optional

from fastapi import APIRouter, Depends
from pydantic import BaseModel

from app.api.deps import get_default_metric_config, unprocessable
from app.core.exceptions import RaydiffError
from app.schemas.metric import ComparisonResult, MetricConfig
from app.schemas.path import PathSet
from app.services.metrics import compare_path_sets

logger = logging.getLogger(__name__)

router = APIRouter()


class CompareRequest(BaseModel):
    x: PathSet
    y: PathSet
    config: Optional[MetricConfig] = None


@router.post("/compare", response_model=ComparisonResult, summary="Compare two path sets")
def compare(
    body: CompareRequest,
    default_config: MetricConfig = Depends(get_default_metric_config),
) -> ComparisonResult:
    """
    HRT and CRT between two path sets of the same receiver, with the
    per-feature components of both distances.
    """
    try:
        return compare_path_sets(body.x, body.y, body.config or default_config)
    except RaydiffError as exc:
        logger.warning(f"Comparison rejected: {exc}")
        raise unprocessable(exc)
