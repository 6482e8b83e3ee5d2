"""HTTP face of the scorer: /v1/info, /v1/score, /v1/train.

Wire format:

    GET  /v1/info   -> {"model": str, "max_batch": int, "version": str}
    POST /v1/score  {"sentences": [[tok, ...], ...]}
                    -> {"probabilities": [float, ...]}
    POST /v1/train  {"examples": [{"tokens": [...], "label": 0|1}, ...],
                     "learning_rate": float | null}
                    -> {"loss": float, "steps": int}

Errors: 400 malformed request, 413 batch too large, 409 training already in
flight, 503 model not loaded.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .model import ScoringModel

DEFAULT_MAX_BATCH = 256


class ScoreRequest(BaseModel):
    sentences: list[list[str]] = Field(min_length=1)


class TrainExample(BaseModel):
    tokens: list[str] = Field(min_length=1)
    label: int = Field(ge=0, le=1)


class TrainRequest(BaseModel):
    examples: list[TrainExample] = Field(min_length=1)
    learning_rate: float | None = None


def create_app(model: ScoringModel | None = None, max_batch: int = DEFAULT_MAX_BATCH):
    app = FastAPI(title="scorer-service", version=__version__)
    app.state.model = model
    app.state.max_batch = max_batch

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    def require_model():
        if app.state.model is None:
            return JSONResponse(status_code=503, content={"error": "model not loaded"})
        return None

    @app.get("/v1/info")
    def info():
        return {
            "model": "hashed-transformer-classifier",
            "max_batch": app.state.max_batch,
            "version": __version__,
        }

    @app.post("/v1/score")
    def score(request: ScoreRequest):
        missing = require_model()
        if missing is not None:
            return missing
        if len(request.sentences) > app.state.max_batch:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch exceeds max_batch={app.state.max_batch}"},
            )
        probs = app.state.model.score(request.sentences)
        return {"probabilities": probs}

    @app.post("/v1/train")
    def train(request: TrainRequest):
        missing = require_model()
        if missing is not None:
            return missing
        model = app.state.model
        if not model.train_lock.acquire(blocking=False):
            return JSONResponse(
                status_code=409, content={"error": "a training call is in flight"}
            )
        try:
            loss, steps = model.train_steps(
                [ex.model_dump() for ex in request.examples],
                learning_rate=request.learning_rate,
            )
        finally:
            model.train_lock.release()
        return {"loss": loss, "steps": steps}

    return app


def app_from_env() -> FastAPI:
    """Build the app from environment configuration (used by uvicorn)."""
    device = os.environ.get("SCORER_SERVICE_DEVICE", "cpu")
    max_batch = int(os.environ.get("SCORER_SERVICE_MAX_BATCH", DEFAULT_MAX_BATCH))
    if os.environ.get("SCORER_SERVICE_DEFER_LOAD") == "1":
        return create_app(model=None, max_batch=max_batch)
    model = ScoringModel(
        device=device, seed=int(os.environ.get("SCORER_SERVICE_SEED", "0"))
    )
    path = os.environ.get("SCORER_SERVICE_MODEL_PATH")
    if path and os.path.exists(path):
        model.load(path)
    return create_app(model=model, max_batch=max_batch)
