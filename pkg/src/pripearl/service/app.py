"""FastAPI application serving noisy counts over HTTP.

Read endpoints never reveal exact breakdown counts or the noise secret.
Admin endpoints stage changes on a copy of the store and publish with one
reference swap, so queries always see a complete snapshot.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import engine
from ..config import ServiceSettings
from ..errors import SnapshotError, UnknownEntityError, ValidationError
from ..store import Store
from ..timegrid import (
    TimeRange,
    completed_end,
    format_instant,
    parse_instant,
    truncate_to_completed,
)
from .schemas import (
    AnalyticsResponse,
    HealthResponse,
    IngestResponse,
    SnapshotRequest,
    SnapshotResponse,
    TopKEntry,
)
from .state import ServiceState


def _bad(field: str | None, message: str) -> None:
    detail: dict[str, str] = {"message": message}
    if field:
        detail["field"] = field
    raise HTTPException(status_code=400, detail=detail)


def create_app(settings: ServiceSettings) -> FastAPI:
    state = ServiceState(settings)
    app = FastAPI(title="pripearl", version="0.1.0")
    app.state.analytics = state
    budget_bound = engine.privacy_loss_bound(state.budget, settings.epsilon)

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = [str(part) for part in first.get("loc", []) if part not in ("query", "body")]
        return JSONResponse(
            status_code=400,
            content={
                "detail": {
                    "field": ".".join(loc),
                    "message": str(first.get("msg", "invalid request")),
                }
            },
        )

    @app.exception_handler(ValidationError)
    async def on_validation_error(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": {"message": str(exc)}})

    @app.exception_handler(UnknownEntityError)
    async def on_unknown_entity(request: Request, exc: UnknownEntityError):
        return JSONResponse(status_code=404, content={"detail": {"message": str(exc)}})

    @app.exception_handler(SnapshotError)
    async def on_snapshot_error(request: Request, exc: SnapshotError):
        return JSONResponse(status_code=400, content={"detail": {"message": str(exc)}})

    def require_store() -> Store:
        store = state.store
        if store is None:
            raise HTTPException(
                status_code=503, detail={"message": "no snapshot loaded"}
            )
        return store

    def require_admin(request: Request) -> None:
        token = settings.admin_token
        supplied = request.headers.get("x-admin-token")
        if not token or supplied != token:
            raise HTTPException(
                status_code=401, detail={"message": "admin token missing or invalid"}
            )

    def check_text(field: str, value: str) -> None:
        if not value:
            _bad(field, "must be non-empty")
        if "\x1f" in value:
            _bad(field, "contains the reserved 0x1F byte")

    def parse_field_instant(field: str, text: str) -> int:
        try:
            return parse_instant(text)
        except ValidationError as exc:
            _bad(field, str(exc))
        raise AssertionError("unreachable")

    def parse_range(start_text: str, end_text: str) -> TimeRange:
        start = parse_field_instant("start", start_text)
        end = parse_field_instant("end", end_text)
        if start >= end:
            _bad("start", "start must precede end")
        finest = state.hierarchy.finest
        for field, ts in (("start", start), ("end", end)):
            if not state.hierarchy.is_boundary(finest, ts):
                _bad(field, f"{format_instant(ts)} is not aligned to a {finest} boundary")
        return TimeRange(start, end)

    def common_checks(stat: str, entity: str, attr: str, store: Store) -> None:
        if stat not in state.settings.stat_types:
            _bad("stat", f"unknown stat type {stat!r}")
        check_text("entity", entity)
        check_text("attr", attr)
        if not store.is_registered(entity):
            raise HTTPException(
                status_code=404, detail={"message": f"unknown entity {entity!r}"}
            )

    @app.get("/health", response_model=HealthResponse)
    async def health():
        store = state.store
        return HealthResponse(
            status="ok",
            snapshotLoaded=store is not None,
            cells=store.cell_count if store is not None else 0,
        )

    @app.get(
        "/v1/count",
        response_model=AnalyticsResponse,
        response_model_exclude_none=True,
    )
    async def count(
        request: Request,
        stat: str,
        entity: str,
        attr: str,
        start: str,
        end: str,
        value: str | None = None,
        topK: int | None = None,
    ):
        store = require_store()
        common_checks(stat, entity, attr, store)
        if value is None:
            _bad("value", "count requests require a value")
        if topK is not None:
            _bad("topK", "exactly one of value or topK; rankings are served at /v1/topk")
        assert value is not None
        check_text("value", value)
        requested = parse_range(start, end)
        now = state.now(request.headers.get("x-now"))
        served_end = completed_end(requested, now, state.hierarchy)
        truncated = truncate_to_completed(requested, now, state.hierarchy)
        if truncated is None:
            return AnalyticsResponse(
                value=0,
                truncatedEnd=format_instant(served_end),
                budgetBound=budget_bound,
            )
        answer = engine.compute_noisy_count(
            state.params, stat, entity, attr, value, truncated, store
        )
        return AnalyticsResponse(
            value=answer.value,
            suppressedCount=int(answer.suppressed),
            partitionSize=answer.partition_size,
            truncatedEnd=format_instant(truncated.end),
            budgetBound=budget_bound,
        )

    @app.get(
        "/v1/topk",
        response_model=AnalyticsResponse,
        response_model_exclude_none=True,
    )
    async def topk(
        request: Request,
        stat: str,
        entity: str,
        attr: str,
        start: str,
        end: str,
        topK: int | None = None,
        kMax: int = 100,
        value: str | None = None,
    ):
        store = require_store()
        common_checks(stat, entity, attr, store)
        if topK is None:
            _bad("topK", "ranking requests require topK")
        if value is not None:
            _bad("value", "exactly one of value or topK; single counts are served at /v1/count")
        assert topK is not None
        if topK < 1:
            _bad("topK", "topK must be at least 1")
        if kMax < 1:
            _bad("kMax", "kMax must be at least 1")
        if topK > kMax:
            _bad("topK", "topK cannot exceed kMax")
        requested = parse_range(start, end)
        now = state.now(request.headers.get("x-now"))
        served_end = completed_end(requested, now, state.hierarchy)
        truncated = truncate_to_completed(requested, now, state.hierarchy)
        if truncated is None:
            return AnalyticsResponse(
                rows=[],
                truncatedEnd=format_instant(served_end),
                budgetBound=budget_bound,
                candidateSelection="true-counts",
            )
        result = engine.top_k_detailed(
            state.params, stat, entity, attr, truncated, topK, kMax, store
        )
        return AnalyticsResponse(
            rows=[TopKEntry(value=v, count=a.value) for v, a in result.rows],
            suppressedCount=result.suppressed_count,
            partitionSize=result.partition_size,
            truncatedEnd=format_instant(truncated.end),
            budgetBound=budget_bound,
            candidateSelection="true-counts",
        )

    @app.post("/v1/admin/ingest", response_model=IngestResponse)
    async def admin_ingest(request: Request):
        require_admin(request)
        if not state.ingest_lock.acquire(blocking=False):
            raise HTTPException(
                status_code=409, detail={"message": "an ingest is already running"}
            )
        try:
            staged = state.store.copy() if state.store is not None else state.fresh_store()
            content_type = request.headers.get("content-type", "")
            if content_type.startswith("application/json"):
                try:
                    body = await request.json()
                except ValueError:
                    _bad("body", "ingest body must be JSON with a 'path' field")
                if not isinstance(body, dict) or not isinstance(body.get("path"), str):
                    _bad("path", "ingest body must name an events file path")
                try:
                    report = staged.ingest_ndjson_file(body["path"])
                except OSError as exc:
                    _bad("path", f"cannot read events file: {exc}")
            else:
                text = (await request.body()).decode("utf-8", errors="replace")
                report = staged.ingest_ndjson(text.splitlines())
            state.store = staged
        finally:
            state.ingest_lock.release()
        return IngestResponse(
            rowsRead=report.rows_read,
            rowsRejected=report.rows_rejected,
            cellsWritten=report.cells_written,
        )

    @app.post("/v1/admin/snapshot", response_model=SnapshotResponse)
    async def admin_snapshot(request: Request, body: SnapshotRequest):
        require_admin(request)
        if body.action == "save":
            store = require_store()
            store.snapshot_save(body.path)
            return SnapshotResponse(status="saved", path=body.path, cells=store.cell_count)
        if body.action == "load":
            if not state.ingest_lock.acquire(blocking=False):
                raise HTTPException(
                    status_code=409, detail={"message": "an ingest is already running"}
                )
            try:
                loaded = Store.snapshot_load(
                    body.path, state.hierarchy, settings.stat_types
                )
                state.store = loaded
            finally:
                state.ingest_lock.release()
            return SnapshotResponse(status="loaded", path=body.path, cells=loaded.cell_count)
        _bad("action", "action must be 'save' or 'load'")
        raise AssertionError("unreachable")

    return app
