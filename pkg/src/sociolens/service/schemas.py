"""Wire models for the HTTP API.

Every response model carries `version`: the dataset's journal event count at
the time the response was computed. Two reads with equal versions saw the
same committed state.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field


class ErrorDetail(BaseModel):
    code: str
    message: str


class ErrorBody(BaseModel):
    error: ErrorDetail


class CreateDatasetRequest(BaseModel):
    dataset_id: str = Field(min_length=1, max_length=128, pattern=r"^[A-Za-z0-9._-]+$")
    platform: Literal["twitter", "youtube"]


class DatasetSummary(BaseModel):
    dataset_id: str
    platform: str
    version: int
    batch_count: int
    post_count: int
    user_count: int
    node_count: int
    edge_count: int
    community_count: int
    has_topics: bool


class DatasetList(BaseModel):
    datasets: list[DatasetSummary]


class IngestRequest(BaseModel):
    path: Optional[str] = None  # server-local ingestion file
    content: Optional[str] = None  # inline records, one per line
    source: Optional[str] = None  # display name for inline content
    seed: Optional[int] = Field(default=None, ge=0, lt=2**31)


class IngestReportBody(BaseModel):
    batch_id: int
    version: int
    source: str
    digest: str
    seed: int
    accepted: int
    rejected: int
    reject_reasons: dict[str, int]
    reject_examples: list[str]
    edge_tallies: dict[str, int]
    node_count: int
    edge_count: int
    community_count: int
    modularity: float
    duration_s: float


class IngestAccepted(BaseModel):
    job_id: str
    status_url: str


class JobStatus(BaseModel):
    job_id: str
    status: Literal["running", "done", "failed"]
    stage: str
    report: Optional[IngestReportBody] = None
    error: Optional[ErrorDetail] = None


class TimeSeriesBody(BaseModel):
    type: Literal["time_series"] = "time_series"
    granularity: str
    buckets: list[str]
    counts: list[int]
    by_sentiment: Optional[dict[str, list[int]]] = None


class CategoricalBody(BaseModel):
    type: Literal["categorical"] = "categorical"
    field: str
    entries: list[tuple[str, int]]


class RankedListBody(BaseModel):
    type: Literal["ranked_list"] = "ranked_list"
    kind: str
    entries: list[tuple[str, int]]


class MatrixBody(BaseModel):
    type: Literal["matrix"] = "matrix"
    mode: str
    row_ids: list[str]
    row_names: list[str]
    col_ids: list[str]
    col_names: list[str]
    values: list[list[float]]


class CapabilityAbsentBody(BaseModel):
    type: Literal["capability_absent"] = "capability_absent"
    capability: str
    reason: str


AggregationBody = Union[
    TimeSeriesBody, CategoricalBody, RankedListBody, MatrixBody, CapabilityAbsentBody
]


class AggregationResponse(BaseModel):
    version: int
    result: AggregationBody


class NetworkNode(BaseModel):
    id: str
    x: float
    y: float
    community: Optional[str] = None
    community_name: Optional[str] = None
    degree: int


class NetworkEdge(BaseModel):
    source: str
    target: str
    weight: int


class NetworkResponse(BaseModel):
    version: int
    node_count: int
    edge_count: int
    edges_returned: int
    nodes: list[NetworkNode]
    edges: list[NetworkEdge]


class TopicPoint(BaseModel):
    post_id: str
    x: float
    y: float
    topic_index: int
    topic_label: str


class TopicMapResponse(BaseModel):
    version: int
    points: list[TopicPoint]


class ReclusterRequest(BaseModel):
    seed: Optional[int] = Field(default=None, ge=0, lt=2**31)
    threshold: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    k_topics: Optional[int] = Field(default=None, ge=1)


class RelayoutRequest(BaseModel):
    iterations: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0, lt=2**31)


class RenameRequest(BaseModel):
    name: str = Field(min_length=1, max_length=200)


class RenameResponse(BaseModel):
    version: int
    kind: str
    label_id: str
    name: str


class PostsResponse(BaseModel):
    version: int
    total: int
    page: int
    page_size: int
    posts: list[dict]


class OperationResponse(BaseModel):
    version: int
    detail: dict
