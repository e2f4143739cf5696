"""HTTP service: ingestion, analytics, network/topic maps, labeling.

All endpoints live under /api/v1. Reads are side-effect free and answer from
the engine's current published snapshot; POST /batches and PUT /labels are
the only mutating paths. Errors use a structured body with a machine-readable
code. FilterSpec is encoded in query parameters (see `filter_from_query`).
"""

from __future__ import annotations

import json
import re
import threading
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from ..analytics import (
    AnalyticsView,
    CapabilityAbsent,
    Categorical,
    Matrix,
    RankedList,
    TimeSeries,
    UnknownLabelError,
)
from ..config import Config
from ..engine import Engine, EngineSnapshot, IngestReport, PipelineError
from ..model import FilterSpec, Platform, Sentiment, parse_timestamp, serialize_record
from ..store import (
    DatasetLockedError,
    DatasetStore,
    DuplicateBatchError,
    StoreError,
    UnknownDatasetError,
)
from . import schemas

API_PREFIX = "/api/v1"
_DATE_ONLY = re.compile(r"^\d{4}-\d{2}-\d{2}$")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    body = schemas.ErrorBody(error=schemas.ErrorDetail(code=code, message=message))
    return JSONResponse(status_code=status, content=body.model_dump())


class DatasetHub:
    """Engine-per-dataset cache; engines are opened lazily and kept warm."""

    def __init__(self, config: Config):
        self.config = config
        self.root = Path(config.dataset_root)
        self._engines: dict[str, Engine] = {}
        self._lock = threading.Lock()

    def create(self, dataset_id: str, platform: Platform) -> Engine:
        with self._lock:
            if dataset_id in self._engines or DatasetStore(self.root, dataset_id).exists():
                raise ApiError(409, "dataset_exists", f"dataset {dataset_id!r} already exists")
            engine = Engine.create(
                self.root, dataset_id, platform, config=self.config.engine_config()
            )
            self._engines[dataset_id] = engine
            return engine

    def get(self, dataset_id: str) -> Engine:
        with self._lock:
            engine = self._engines.get(dataset_id)
            if engine is None:
                try:
                    engine = Engine.open(
                        self.root, dataset_id, config=self.config.engine_config()
                    )
                except UnknownDatasetError:
                    raise ApiError(404, "unknown_dataset", f"unknown dataset: {dataset_id!r}")
                self._engines[dataset_id] = engine
            return engine

    def ids(self) -> list[str]:
        known = DatasetStore.list_datasets(self.root)
        with self._lock:
            return sorted(set(known) | set(self._engines))


class JobBook:
    """Status registry for asynchronous ingestions."""

    def __init__(self):
        self._jobs: dict[str, dict] = {}
        self._lock = threading.Lock()

    def start(self) -> str:
        job_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._jobs[job_id] = {"status": "running", "stage": "queued"}
        return job_id

    def stage(self, job_id: str, stage: str) -> None:
        with self._lock:
            if job_id in self._jobs:
                self._jobs[job_id]["stage"] = stage

    def finish(self, job_id: str, report: IngestReport) -> None:
        with self._lock:
            self._jobs[job_id] = {
                "status": "done",
                "stage": "done",
                "report": report.to_dict(),
            }

    def fail(self, job_id: str, code: str, message: str) -> None:
        with self._lock:
            self._jobs[job_id] = {
                "status": "failed",
                "stage": "failed",
                "error": {"code": code, "message": message},
            }

    def get(self, job_id: str) -> Optional[dict]:
        with self._lock:
            job = self._jobs.get(job_id)
            return dict(job) if job is not None else None


def filter_from_query(
    keywords: Optional[str] = Query(default=None, description="comma-separated terms, AND"),
    date_from: Optional[str] = Query(default=None),
    date_to: Optional[str] = Query(default=None),
    language: Optional[str] = Query(default=None),
    sentiment: Optional[str] = Query(default=None),
    community: Optional[str] = Query(default=None),
    topic: Optional[str] = Query(default=None),
) -> FilterSpec:
    """Decode the FilterSpec query encoding shared with the dashboard.

    Dates accept RFC-3339 timestamps or plain YYYY-MM-DD (date_to expands to
    the end of that day, keeping the range inclusive).
    """
    try:
        parsed_from = _parse_date(date_from, end_of_day=False)
        parsed_to = _parse_date(date_to, end_of_day=True)
    except ValueError as exc:
        raise ApiError(422, "invalid_filter", str(exc))
    sent = None
    if sentiment is not None:
        try:
            sent = Sentiment(sentiment)
        except ValueError:
            raise ApiError(
                422,
                "invalid_filter",
                f"sentiment must be one of {[s.value for s in Sentiment]}, got {sentiment!r}",
            )
    kw = tuple(t.strip() for t in keywords.split(",") if t.strip()) if keywords else ()
    return FilterSpec(
        keywords=kw,
        date_from=parsed_from,
        date_to=parsed_to,
        language=language or None,
        sentiment=sent,
        community=community or None,
        topic=topic or None,
    )


def _parse_date(value: Optional[str], end_of_day: bool):
    if value is None or value == "":
        return None
    if _DATE_ONLY.match(value):
        value = f"{value}T23:59:59Z" if end_of_day else f"{value}T00:00:00Z"
    return parse_timestamp(value)


def _aggregation_body(result) -> dict:
    if isinstance(result, TimeSeries):
        return schemas.TimeSeriesBody(
            granularity=result.granularity,
            buckets=list(result.buckets),
            counts=list(result.counts),
            by_sentiment=(
                {k: list(v) for k, v in result.by_sentiment.items()}
                if result.by_sentiment is not None
                else None
            ),
        ).model_dump()
    if isinstance(result, Categorical):
        return schemas.CategoricalBody(
            field=result.field, entries=list(result.entries)
        ).model_dump()
    if isinstance(result, RankedList):
        return schemas.RankedListBody(
            kind=result.kind, entries=list(result.entries)
        ).model_dump()
    if isinstance(result, Matrix):
        return schemas.MatrixBody(
            mode=result.mode,
            row_ids=list(result.row_ids),
            row_names=list(result.row_names),
            col_ids=list(result.col_ids),
            col_names=list(result.col_names),
            values=[list(row) for row in result.values],
        ).model_dump()
    if isinstance(result, CapabilityAbsent):
        return schemas.CapabilityAbsentBody(
            capability=result.capability, reason=result.reason
        ).model_dump()
    raise TypeError(f"unexpected aggregation result {type(result)!r}")


def _dataset_summary(dataset_id: str, engine: Engine) -> schemas.DatasetSummary:
    snap = engine.snapshot()
    return schemas.DatasetSummary(
        dataset_id=dataset_id,
        platform=snap.platform.value,
        version=snap.version,
        batch_count=len(snap.batches),
        post_count=len(snap.corpus),
        user_count=len(engine.users),
        node_count=snap.graph.node_count(),
        edge_count=snap.graph.edge_count(),
        community_count=snap.partition.community_count() if snap.partition else 0,
        has_topics=snap.topic_model is not None,
    )


def create_app(config: Optional[Config] = None) -> FastAPI:
    config = config or Config()
    hub = DatasetHub(config)
    jobs = JobBook()
    app = FastAPI(title="sociolens", version="1.0", docs_url=f"{API_PREFIX}/docs")
    app.state.hub = hub

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(UnknownLabelError)
    async def _label_error(_req: Request, exc: UnknownLabelError):
        return _error_response(404, "unknown_label", str(exc.args[0]))

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError):
        return _error_response(422, "invalid_parameter", str(exc))

    # -- datasets ---------------------------------------------------------

    @app.post(
        f"{API_PREFIX}/datasets",
        response_model=schemas.DatasetSummary,
        status_code=201,
    )
    def create_dataset(body: schemas.CreateDatasetRequest):
        engine = hub.create(body.dataset_id, Platform(body.platform))
        return _dataset_summary(body.dataset_id, engine)

    @app.get(f"{API_PREFIX}/datasets", response_model=schemas.DatasetList)
    def list_datasets():
        return schemas.DatasetList(
            datasets=[_dataset_summary(ds, hub.get(ds)) for ds in hub.ids()]
        )

    @app.get(f"{API_PREFIX}/datasets/{{dataset_id}}", response_model=schemas.DatasetSummary)
    def dataset_status(dataset_id: str):
        return _dataset_summary(dataset_id, hub.get(dataset_id))

    # -- ingestion ----------------------------------------------------------

    @app.post(f"{API_PREFIX}/datasets/{{dataset_id}}/batches", status_code=200)
    def ingest_batch(
        dataset_id: str,
        body: schemas.IngestRequest,
        wait: bool = Query(default=True),
    ):
        engine = hub.get(dataset_id)
        if (body.path is None) == (body.content is None):
            raise ApiError(
                422, "invalid_request", "provide exactly one of 'path' or 'content'"
            )
        if body.path is not None:
            path = Path(body.path)
            if not path.is_file():
                raise ApiError(422, "invalid_request", f"no such ingestion file: {body.path}")
            data = path.read_bytes()
            source = body.source or path.name
        else:
            data = body.content.encode("utf-8")
            source = body.source or "inline"

        if wait:
            report = _run_ingest(engine, data, source, body.seed, None, jobs)
            return JSONResponse(
                content=schemas.IngestReportBody(**report.to_dict()).model_dump()
            )

        job_id = jobs.start()
        thread = threading.Thread(
            target=_run_ingest,
            args=(engine, data, source, body.seed, job_id, jobs),
            daemon=True,
        )
        thread.start()
        return JSONResponse(
            status_code=202,
            content=schemas.IngestAccepted(
                job_id=job_id,
                status_url=f"{API_PREFIX}/datasets/{dataset_id}/batches/jobs/{job_id}",
            ).model_dump(),
        )

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/batches/jobs/{{job_id}}",
        response_model=schemas.JobStatus,
    )
    def batch_status(dataset_id: str, job_id: str):
        hub.get(dataset_id)
        job = jobs.get(job_id)
        if job is None:
            raise ApiError(404, "unknown_job", f"unknown ingestion job: {job_id!r}")
        return schemas.JobStatus(job_id=job_id, **job)

    # -- analytics -------------------------------------------------------------

    def _view(dataset_id: str) -> tuple[EngineSnapshot, AnalyticsView]:
        snap = hub.get(dataset_id).snapshot()
        return snap, snap.analytics()

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/analytics/timeline",
        response_model=schemas.AggregationResponse,
    )
    def analytics_timeline(
        dataset_id: str,
        request: Request,
        granularity: str = Query(default="day"),
        split_by_sentiment: bool = Query(default=False),
    ):
        snap, view = _view(dataset_id)
        spec = _spec_from_request(request)
        result = view.timeline(spec, granularity, split_by_sentiment)
        return {"version": snap.version, "result": _aggregation_body(result)}

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/analytics/distribution",
        response_model=schemas.AggregationResponse,
    )
    def analytics_distribution(
        dataset_id: str, request: Request, field: str = Query(default="language")
    ):
        snap, view = _view(dataset_id)
        spec = _spec_from_request(request)
        return {
            "version": snap.version,
            "result": _aggregation_body(view.distribution(spec, field)),
        }

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/analytics/geo",
        response_model=schemas.AggregationResponse,
    )
    def analytics_geo(dataset_id: str, request: Request):
        snap, view = _view(dataset_id)
        spec = _spec_from_request(request)
        return {
            "version": snap.version,
            "result": _aggregation_body(view.geo_distribution(spec)),
        }

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/analytics/top",
        response_model=schemas.AggregationResponse,
    )
    def analytics_top(
        dataset_id: str,
        request: Request,
        kind: str = Query(default="posts"),
        k: int = Query(default=10, ge=0, le=1000),
    ):
        snap, view = _view(dataset_id)
        spec = _spec_from_request(request)
        return {
            "version": snap.version,
            "result": _aggregation_body(view.top_content(spec, kind, k)),
        }

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/analytics/wordcloud",
        response_model=schemas.AggregationResponse,
    )
    def analytics_wordcloud(
        dataset_id: str,
        request: Request,
        k: int = Query(default=50, ge=0, le=1000),
    ):
        snap, view = _view(dataset_id)
        spec = _spec_from_request(request)
        return {
            "version": snap.version,
            "result": _aggregation_body(view.wordcloud_terms(spec, k)),
        }

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/analytics/topics-per-community",
        response_model=schemas.AggregationResponse,
    )
    def analytics_topics_per_community(
        dataset_id: str, request: Request, mode: str = Query(default="counts")
    ):
        snap, view = _view(dataset_id)
        spec = _spec_from_request(request)
        return {
            "version": snap.version,
            "result": _aggregation_body(view.topics_per_community(spec, mode)),
        }

    # -- network / topics --------------------------------------------------------

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/network",
        response_model=schemas.NetworkResponse,
    )
    def network(
        dataset_id: str,
        edge_cap: Optional[int] = Query(default=None, ge=0, le=1_000_000),
    ):
        engine = hub.get(dataset_id)
        snap = engine.snapshot()
        cap = edge_cap if edge_cap is not None else config.network_edge_cap
        return snap.network_payload(cap)

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/topics/map",
        response_model=schemas.TopicMapResponse,
    )
    def topic_map(dataset_id: str):
        snap = hub.get(dataset_id).snapshot()
        return {"version": snap.version, "points": snap.topic_map()}

    # -- labels ---------------------------------------------------------------------

    @app.put(
        f"{API_PREFIX}/datasets/{{dataset_id}}/labels/{{kind}}/{{label_id}}",
        response_model=schemas.RenameResponse,
    )
    def rename_label(dataset_id: str, kind: str, label_id: str, body: schemas.RenameRequest):
        if kind not in ("community", "topic"):
            raise ApiError(422, "invalid_parameter", "label kind must be community or topic")
        engine = hub.get(dataset_id)
        try:
            detail = engine.rename_label(kind, label_id, body.name)
        except KeyError as exc:
            raise ApiError(404, "unknown_label", str(exc.args[0]))
        except DatasetLockedError as exc:
            raise ApiError(409, "dataset_locked", str(exc))
        return schemas.RenameResponse(
            version=detail["version"],
            kind=kind,
            label_id=detail["label_id"],
            name=detail["name"],
        )

    # -- posts drill-down --------------------------------------------------------------

    @app.get(
        f"{API_PREFIX}/datasets/{{dataset_id}}/posts",
        response_model=schemas.PostsResponse,
    )
    def posts(
        dataset_id: str,
        request: Request,
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=500),
    ):
        snap, view = _view(dataset_id)
        spec = _spec_from_request(request)
        matched = view.select(spec)
        corpus = snap.corpus
        ordered = sorted(
            matched,
            key=lambda pid: (-int(corpus.created_ts[corpus.row_of(pid)]), pid),
        )
        start = (page - 1) * page_size
        chunk = ordered[start : start + page_size]
        return {
            "version": snap.version,
            "total": len(ordered),
            "page": page,
            "page_size": page_size,
            "posts": [json.loads(serialize_record(corpus.post(pid))) for pid in chunk],
        }

    # -- maintenance ops ------------------------------------------------------------

    @app.post(
        f"{API_PREFIX}/datasets/{{dataset_id}}/recluster",
        response_model=schemas.OperationResponse,
    )
    def recluster(dataset_id: str, body: Optional[schemas.ReclusterRequest] = None):
        engine = hub.get(dataset_id)
        body = body or schemas.ReclusterRequest()
        try:
            detail = engine.recluster(
                seed=body.seed, threshold=body.threshold, k_topics=body.k_topics
            )
        except DatasetLockedError as exc:
            raise ApiError(409, "dataset_locked", str(exc))
        except PipelineError as exc:
            raise ApiError(422, "pipeline_error", str(exc))
        return {"version": detail["version"], "detail": detail}

    @app.post(
        f"{API_PREFIX}/datasets/{{dataset_id}}/relayout",
        response_model=schemas.OperationResponse,
    )
    def relayout(dataset_id: str, body: Optional[schemas.RelayoutRequest] = None):
        engine = hub.get(dataset_id)
        body = body or schemas.RelayoutRequest()
        try:
            detail = engine.relayout(iterations=body.iterations, seed=body.seed)
        except DatasetLockedError as exc:
            raise ApiError(409, "dataset_locked", str(exc))
        return {"version": detail["version"], "detail": detail}

    return app


def _spec_from_request(request: Request) -> FilterSpec:
    """Build the FilterSpec from raw query params (shared across endpoints)."""
    q = request.query_params
    return filter_from_query(
        keywords=q.get("keywords"),
        date_from=q.get("date_from"),
        date_to=q.get("date_to"),
        language=q.get("language"),
        sentiment=q.get("sentiment"),
        community=q.get("community"),
        topic=q.get("topic"),
    )


def _run_ingest(
    engine: Engine,
    data: bytes,
    source: str,
    seed: Optional[int],
    job_id: Optional[str],
    jobs: JobBook,
) -> IngestReport:
    progress = (lambda stage: jobs.stage(job_id, stage)) if job_id else None
    try:
        report = engine.ingest_bytes(data, source=source, seed=seed, progress=progress)
    except DuplicateBatchError as exc:
        if job_id:
            jobs.fail(job_id, "duplicate_batch", str(exc))
            return None
        raise ApiError(409, "duplicate_batch", str(exc))
    except DatasetLockedError as exc:
        if job_id:
            jobs.fail(job_id, "dataset_locked", str(exc))
            return None
        raise ApiError(409, "dataset_locked", str(exc))
    except StoreError as exc:
        if job_id:
            jobs.fail(job_id, "store_error", str(exc))
            return None
        raise ApiError(500, "store_error", str(exc))
    if job_id:
        jobs.finish(job_id, report)
    return report
