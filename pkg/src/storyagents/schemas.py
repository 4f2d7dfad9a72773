"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ProjectIn(BaseModel):
    title: str = ""
    body: str


class SessionCreateRequest(BaseModel):
    project: Optional[ProjectIn] = None
    model: str = "mock-small"
    provider: str = "mock"
    techniques: list[str] = Field(default_factory=lambda: ["100dollar"])
    fixture: Optional[str] = None  # name of a packaged recorded-run bundle


class SessionCreateResponse(BaseModel):
    id: str
    state: str = "created"


class SessionStateResponse(BaseModel):
    id: str
    state: str
    config: dict
    snapshot: Optional[dict] = None


class FeedbackRequest(BaseModel):
    practitioner_role: str
    experience: str = ""
    satisfaction: str
    comment: str = ""
    suggestion: str = ""


class FeedbackResponse(BaseModel):
    id: str


class FeedbackListResponse(BaseModel):
    entries: list[dict]
