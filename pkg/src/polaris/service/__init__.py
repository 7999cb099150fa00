"""HTTP service wrapping the steering toolkit, plus its request/response models."""

from .app import app, create_app

__all__ = ["app", "create_app"]
