"""HTTP service exposing the scene-graph matching pipeline."""

from .app import create_app

__all__ = ["create_app"]
