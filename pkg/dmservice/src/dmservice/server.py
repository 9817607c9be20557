"""HTTP verdict service: POST /assess and GET /healthz."""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .model import load_model_dir, predict_p_accept


class ModelHolder:
    """Lazily loaded model shared by the endpoints; inference is serialized
    so repeated identical requests stay deterministic."""

    def __init__(self, model_dir: str | Path | None = None, threshold: float | None = None):
        self.model = None
        self.tokenizer = None
        self.version = "unloaded"
        self.threshold = threshold
        self._lock = threading.Lock()
        if model_dir is not None:
            self.load(model_dir)

    def load(self, model_dir: str | Path) -> None:
        model, tokenizer, version = load_model_dir(model_dir)
        with self._lock:
            self.model = model
            self.tokenizer = tokenizer
            self.version = version
            if self.threshold is None:
                self.threshold = model.config.threshold

    @property
    def ready(self) -> bool:
        return self.model is not None

    def assess(self, text: str) -> dict:
        with self._lock:
            p_accept = predict_p_accept(self.model, self.tokenizer, text)
            verdict = "accept" if p_accept >= self.threshold else "reject"
            return {"p_accept": p_accept, "verdict": verdict, "model_version": self.version}


def create_app(model_dir: str | Path | None = None, threshold: float | None = None) -> FastAPI:
    app = FastAPI(title="dmservice")
    holder = ModelHolder(model_dir, threshold)
    app.state.holder = holder

    @app.get("/healthz")
    def healthz():
        status = "ok" if holder.ready else "loading"
        return {"status": status, "model_version": holder.version}

    @app.post("/assess")
    async def assess(payload: dict):
        if not holder.ready:
            return JSONResponse({"error": "model not loaded"}, status_code=503)
        text = payload.get("input")
        if not isinstance(text, str) or not text:
            return JSONResponse({"error": "missing or empty 'input'"}, status_code=400)
        return holder.assess(text)

    return app
