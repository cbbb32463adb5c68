"""HTTP service exposing the palstream operations.

Run it with ``python -m palstream.service`` or point uvicorn at
``palstream.service.app:app``.  The CLI calls the same handler functions
in-process unless ``--server`` directs it at a remote instance.
"""

from . import handlers, schemas
from .app import app, create_app

__all__ = ["app", "create_app", "handlers", "schemas"]
