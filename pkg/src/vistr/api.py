"""HTTP JSON service over the ingestion pipeline and query engine.

All error bodies share one schema: {"code", "message", "detail"}.
"""

from __future__ import annotations

import base64
import binascii
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import query_engine as qe
from .errors import (
    AmbiguousTrendError,
    EmptySketchError,
    NoMatchError,
    ParseError,
    PeriodError,
    SchemaError,
    StoreError,
    UnknownTrendError,
    UnsupportedQueryError,
    VariableError,
    VistrError,
)
from .pipeline import Database, IngestConfig
from .render import ChartImage, normalize_sketch
from .series import lttb
from .table import FacetConfig, PhtConfig
from .vocab import load_default_vocabulary

DEFAULT_BODY_LIMIT = 16 * 1024 * 1024


@dataclass
class ApiConfig:
    store_root: str
    body_limit: int = DEFAULT_BODY_LIMIT
    cors_origins: list = field(default_factory=list)


def _error_body(code: str, message: str, detail=None):
    return {"code": code, "message": message, "detail": detail}


_STATUS = {
    ParseError: 400,
    SchemaError: 400,
    VariableError: 400,
    StoreError: 404,
    UnsupportedQueryError: 422,
    EmptySketchError: 422,
    PeriodError: 422,
    UnknownTrendError: 422,
    AmbiguousTrendError: 422,
    NoMatchError: 422,
}


class QueryBody(BaseModel):
    text: str | None = None
    image_base64: str | None = None
    k: int = 3


def create_app(config: ApiConfig) -> FastAPI:
    app = FastAPI(title="vistr", docs_url=None, redoc_url=None)
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    db = Database(config.store_root)
    vocab = load_default_vocabulary()
    cache = {}
    cache_lock = threading.Lock()
    ingest_lock = threading.Lock()

    def _load(table_id: str):
        with cache_lock:
            if table_id in cache:
                return cache[table_id]
        table = db.load_table(table_id)
        store = db.load_store(table_id)
        with cache_lock:
            cache[table_id] = (table, store)
        return table, store

    @app.exception_handler(VistrError)
    async def _vistr_error(request: Request, exc: VistrError):
        status = 500
        for cls, code in _STATUS.items():
            if isinstance(exc, cls):
                status = code
                break
        detail = None
        if isinstance(exc, UnsupportedQueryError):
            detail = {"supported_forms": list(getattr(exc, "supported", []))}
        elif isinstance(exc, ParseError):
            detail = {"row": getattr(exc, "row", None), "col": getattr(exc, "col", None)}
        return JSONResponse(
            status_code=status,
            content=_error_body(type(exc).__name__, str(exc), detail),
        )

    @app.get("/api/tables")
    def list_tables():
        return {"tables": db.list_tables()}

    @app.post("/api/tables", status_code=201)
    async def ingest(
        file: UploadFile = File(...),
        threshold: float = Form(1.0),
        chart_types: str = Form("line,bar,area"),
        min_facet_len: int = Form(5),
        pht_delta: float | None = Form(None),
        pht_lambda: float | None = Form(None),
        table_id: str | None = Form(None),
    ):
        data = await file.read()
        if len(data) > config.body_limit:
            return JSONResponse(
                status_code=413,
                content=_error_body("BodyTooLarge", f"CSV exceeds {config.body_limit} bytes"),
            )
        pht = None
        if pht_lambda is not None:
            pht = PhtConfig(delta=pht_delta or 0.0, lambda_=pht_lambda)
        cfg = IngestConfig(
            prune_threshold=threshold,
            chart_types=tuple(t.strip() for t in chart_types.split(",") if t.strip()),
            facet=FacetConfig(min_facet_len=min_facet_len),
            pht=pht,
        )
        with ingest_lock:
            result = db.ingest_csv(data, table_id=table_id, cfg=cfg)
            with cache_lock:
                cache.pop(result.table_id, None)
        return result.as_dict()

    @app.post("/api/tables/{table_id}/query")
    def query(table_id: str, body: QueryBody):
        table, store = _load(table_id)
        attachment = None
        if body.image_base64:
            try:
                png = base64.b64decode(body.image_base64, validate=True)
            except (binascii.Error, ValueError):
                return JSONResponse(
                    status_code=422,
                    content=_error_body("BadImage", "image_base64 is not valid base64"),
                )
            attachment = normalize_sketch(ChartImage.from_png(png))
        plan = qe.decompose(body.text, table, vocab, attachment=attachment, k=body.k)
        result = qe.execute(plan, store, table, vocab)
        answer = qe.fill(plan, result, vocab, table)
        return {
            "answer": answer,
            "plan": plan.to_json_dict(),
            "matches": [m.as_dict() for m in result.matches],
            "verdict": result.verdict,
        }

    @app.get("/api/tables/{table_id}/patterns")
    def patterns(table_id: str, var: str):
        table, store = _load(table_id)
        if var not in table.variables:
            return JSONResponse(
                status_code=400, content=_error_body("VariableError", f"unknown variable {var!r}")
            )
        return {"variable": var, "groups": qe.pattern_groups(store, var, vocab)}

    @app.get("/api/tables/{table_id}/series")
    def series(table_id: str, vars: str, max_points: int = 2000):
        table, _ = _load(table_id)
        names = [v.strip() for v in vars.split(",") if v.strip()]
        unknown = [v for v in names if v not in table.variables]
        if unknown:
            return JSONResponse(
                status_code=400, content=_error_body("VariableError", f"unknown variables {unknown}")
            )
        x = np.arange(table.n_rows, dtype=np.float64)
        keep = np.arange(table.n_rows)
        if table.n_rows > max_points and names:
            keep = lttb(x, np.asarray(table.variables[names[0]]), max_points)
        timestamps = [table.timestamps[int(i)].strftime("%Y-%m-%d") for i in keep]
        return {
            "timestamps": timestamps,
            "series": {v: [float(table.variables[v][int(i)]) for i in keep] for v in names},
        }

    @app.get("/api/refs/{ref_id}/image")
    def ref_image(ref_id: str):
        path = db.ref_image_path(ref_id)
        if path is None:
            return JSONResponse(
                status_code=404, content=_error_body("NotFound", f"no image for ref {ref_id!r}")
            )
        with open(path, "rb") as fh:
            return Response(content=fh.read(), media_type="image/png")

    return app
