"""HTTP service exposing the hydration-site pipeline."""

from .app import app, create_app

__all__ = ["app", "create_app"]
