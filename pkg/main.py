# main.py
import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from app import __version__
from app.api.v1.endpoints import compare, synth, system
from app.core.config import settings
from app.core.exceptions import RaydiffError
from app.core.logging import configure_logging

configure_logging(settings.log_level)
logger = logging.getLogger("app.main")

app = FastAPI(title=settings.APP_NAME, version=__version__)

app.include_router(compare.router, prefix=settings.API_V1_STR, tags=["compare"])
app.include_router(synth.router, prefix=settings.API_V1_STR, tags=["synth"])
app.include_router(system.router)


@app.exception_handler(RaydiffError)
def raydiff_error_handler(request: Request, exc: RaydiffError) -> JSONResponse:
    logger.warning(f"{request.url.path}: {exc}")
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/")
def root():
    return {"message": "raydiff ray-tracing comparison API", "status": "running"}


@app.get("/health")
def health():
    return {"status": "healthy"}
