"""HTTP API over the analytics engine (FastAPI, /api/v1)."""

from .app import API_PREFIX, create_app

__all__ = ["create_app", "API_PREFIX"]
