"""HTTP service exposing noisy counts and rankings."""

from .app import create_app

__all__ = ["create_app"]
