"""provql: search and causal dependency tracking over system audit logs."""

from .errors import ProvqlError
from .model import Entity, EntityKind, Event, EventCategory, EventGraph
from .reduction import ReductionConfig
from .runtime import Session
from .store import Store

__version__ = "0.1.0"

__all__ = [
    "ProvqlError", "Entity", "EntityKind", "Event", "EventCategory",
    "EventGraph", "ReductionConfig", "Session", "Store", "__version__",
]
