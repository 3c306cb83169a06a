# app/api/v1/endpoints/synth.py
import logging

from fastapi import APIRouter
from pydantic import BaseModel

from app.api.deps import unprocessable
from app.core.exceptions import RaydiffError
from app.schemas.dataset import TraceResult
from app.schemas.layout import ReceiverLayout
from app.schemas.scene import SceneSpec
from app.services.synthrt import trace

logger = logging.getLogger(__name__)

router = APIRouter()


class TraceRequest(BaseModel):
    scene: SceneSpec
    layout: ReceiverLayout
    label: str = ""


@router.post("/synth/trace", response_model=TraceResult, summary="Trace a synthetic scene")
def trace_scene(body: TraceRequest) -> TraceResult:
    try:
        # Single process inside the server.
        return trace(body.scene, body.layout, label=body.label, workers=1)
    except RaydiffError as exc:
        logger.warning(f"Trace rejected: {exc}")
        raise unprocessable(exc)
