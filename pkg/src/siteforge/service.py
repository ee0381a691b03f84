"""HTTP service exposing generation and regeneration to the studio UI.

Stateless: every request carries all inputs; concurrent identical requests
yield identical responses.  Bodies are JSON with an explicit schema_version;
malformed bodies produce 400 with field-level messages, while solver
contradictions are ordinary 200 responses with validity=false.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import pipeline
from .catalog import CATEGORY_CHARS, CATEGORY_COLORS, Category
from .dataset import LEVELS
from .features import FEATURE_NAMES
from .prompts import PromptError, parse_free_text
from .seeds import derive


class GenerateBody(BaseModel):
    labels: dict[str, str] | None = None
    prompt: str | None = None
    seed: int = 0
    temperature: float = Field(default=1.0, gt=0)
    top_k: int = Field(default=7, ge=1)


class RegionBody(BaseModel):
    row: int = Field(ge=0)
    col: int = Field(ge=0)
    height: int = Field(ge=0)
    width: int = Field(ge=0)


class LayoutBody(BaseModel):
    h: int = Field(gt=0)
    w: int = Field(gt=0)
    tiles: list[list[int]]


class RegenerateBody(GenerateBody):
    base_layout: LayoutBody
    region: RegionBody


def _labels_from_body(body: GenerateBody) -> dict[str, str]:
    labels = dict(body.labels or {})
    if body.prompt:
        labels.update(parse_free_text(body.prompt))
    for k, v in labels.items():
        if k not in FEATURE_NAMES:
            raise PromptError(f"unknown feature {k!r}")
        if v not in LEVELS:
            raise PromptError(f"unknown level {v!r} for {k}")
    return labels


def build_app(ctx: pipeline.GenerationContext, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="siteforge service")

    if ui_dir:
        from pathlib import Path

        from fastapi.staticfiles import StaticFiles

        root = Path(ui_dir)

        @app.get("/")
        def index():
            from fastapi.responses import FileResponse

            return FileResponse(root / "index.html")

        app.mount("/dist", StaticFiles(directory=root / "dist"), name="dist")

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        fields = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"schema_version": 1, "errors": fields})

    @app.exception_handler(PromptError)
    async def prompt_handler(request: Request, exc: PromptError):
        return JSONResponse(
            status_code=400,
            content={"schema_version": 1, "errors": [{"field": "prompt", "message": str(exc)}]},
        )

    @app.get("/health")
    def health():
        return {
            "schema_version": 1,
            "status": "ok",
            "checkpoint_hash": ctx.checkpoint.content_hash(),
            "catalog_hash": ctx.catalog.content_hash(),
            "schema_hash": ctx.schema.content_hash(),
            "grid": {"h": ctx.h, "w": ctx.w},
        }

    @app.get("/catalog")
    def catalog():
        return {
            "schema_version": 1,
            "grid": {"h": ctx.h, "w": ctx.w},
            "categories": [
                {
                    "name": cat.name,
                    "char": CATEGORY_CHARS[cat],
                    "color": CATEGORY_COLORS[cat],
                }
                for cat in Category
            ],
            "tiles": [
                {
                    "id": t.id,
                    "name": t.name,
                    "category": t.category.name,
                    "orientation": t.orientation,
                    "reflected": t.reflected,
                    "variant": t.variant,
                }
                for t in ctx.catalog.tiles
            ],
        }

    @app.post("/generate")
    def generate(body: GenerateBody):
        req = pipeline.GenerationRequest(
            labels=_labels_from_body(body),
            seed=body.seed,
            temperature=body.temperature,
            top_k=body.top_k,
        )
        return pipeline.generate(req, ctx).to_dict()

    @app.post("/regenerate")
    def regenerate(body: RegenerateBody):
        import numpy as np

        base = np.array(body.base_layout.tiles, dtype=np.int32)
        if base.shape != (body.base_layout.h, body.base_layout.w):
            return JSONResponse(
                status_code=400,
                content={
                    "schema_version": 1,
                    "errors": [
                        {"field": "base_layout.tiles", "message": "shape mismatch with h/w"}
                    ],
                },
            )
        region = pipeline.Region(
            body.region.row, body.region.col, body.region.height, body.region.width
        )
        try:
            region.check_bounds(ctx.h, ctx.w)
        except ValueError as e:
            return JSONResponse(
                status_code=400,
                content={
                    "schema_version": 1,
                    "errors": [{"field": "region", "message": str(e)}],
                },
            )
        req = pipeline.GenerationRequest(
            labels=_labels_from_body(body),
            seed=body.seed,
            temperature=body.temperature,
            top_k=body.top_k,
            base_layout=base,
            erase_region=region,
        )
        return pipeline.regenerate_region(req, ctx).to_dict()

    return app
