"""HTTP surface for the detection pipeline, versioned under /v1.

POST /v1/detect takes a raw image body or a multipart upload and returns
the pipeline's canonical JSON body (byte-identical to the CLI output for
the same input); inference timing travels in X-Wall-Ms / X-Cpu-Ms headers.
GET /v1/labels lists the label set, GET /v1/health reports the loaded
weight checksum. Detection work runs in a thread pool so the service stays
responsive while frames are being processed.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from starlette.concurrency import run_in_threadpool

from .images import ImageDecodeError
from .pipeline import Pipeline, PipelineConfig

DEFAULT_MAX_BODY = 8 * 1024 * 1024


def create_app(pipeline: Pipeline, max_body_bytes: int = DEFAULT_MAX_BODY) -> FastAPI:
    app = FastAPI(title="foodspot", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "model_checksum": pipeline.store.checksum}

    @app.get("/v1/labels")
    def labels():
        return {"labels": pipeline.labels}

    @app.post("/v1/detect")
    async def detect(
        request: Request,
        conf_threshold: float | None = None,
        nms_threshold: float | None = None,
    ):
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > max_body_bytes:
            return _too_large(int(declared), max_body_bytes)
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = next((v for v in form.values() if hasattr(v, "read")), None)
            if upload is None:
                return JSONResponse({"error": "multipart body has no file field"}, status_code=400)
            body = await upload.read()
        else:
            body = await request.body()
        if len(body) > max_body_bytes:
            return _too_large(len(body), max_body_bytes)
        if not body:
            return JSONResponse({"error": "empty request body"}, status_code=400)
        for name, value in (("conf_threshold", conf_threshold), ("nms_threshold", nms_threshold)):
            if value is not None and not 0.0 < value < 1.0:
                return JSONResponse(
                    {"error": f"{name} must lie strictly between 0 and 1"}, status_code=422
                )
        try:
            response = await run_in_threadpool(
                pipeline.detect_image, body, conf_threshold, nms_threshold
            )
        except ImageDecodeError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return Response(
            content=response.canonical_json(),
            media_type="application/json",
            headers={
                "X-Wall-Ms": f"{response.timing.wall_ms:.3f}",
                "X-Cpu-Ms": f"{response.timing.cpu_ms:.3f}",
            },
        )

    return app


def _too_large(size: int, cap: int) -> JSONResponse:
    return JSONResponse(
        {"error": f"request body of {size} bytes exceeds the {cap} byte cap"},
        status_code=413,
    )


def serve(config: PipelineConfig, host: str = "127.0.0.1", port: int = 8157,
          max_body_bytes: int = DEFAULT_MAX_BODY) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    app = create_app(Pipeline(config), max_body_bytes=max_body_bytes)
    uvicorn.run(app, host=host, port=port, log_level="info")
