"""Wire models for the HTTP interface."""

from __future__ import annotations

from pydantic import BaseModel


class TopKEntry(BaseModel):
    value: str
    count: int


class AnalyticsResponse(BaseModel):
    """Answer to a count or ranking request.

    ``value`` is set for single-value requests, ``rows`` for rankings;
    ``truncatedEnd`` is the range end actually served after completed-unit
    truncation, so clients can detect that the tail was dropped.
    """

    value: int | None = None
    rows: list[TopKEntry] | None = None
    suppressedCount: int = 0
    partitionSize: int = 0
    truncatedEnd: str
    budgetBound: float
    candidateSelection: str | None = None


class IngestResponse(BaseModel):
    rowsRead: int
    rowsRejected: int
    cellsWritten: int


class IngestRequest(BaseModel):
    path: str


class SnapshotRequest(BaseModel):
    action: str
    path: str


class SnapshotResponse(BaseModel):
    status: str
    path: str
    cells: int


class HealthResponse(BaseModel):
    status: str
    snapshotLoaded: bool
    cells: int
