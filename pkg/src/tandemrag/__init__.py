"""Human-steered retrieval over layout-block document intelligence."""

from .errors import (
    AdapterUnavailableError,
    ConflictError,
    EngineError,
    InvalidError,
    NotFoundError,
    SchemaError,
)
from .model import BlockType, BoundingBox, Document, LayoutBlock, Page, ProcessingState
from .retrievers import (
    RetrievalResult,
    label_naive_retrieve,
    naive_retrieve,
    register_strategy,
    symbiotic_retrieve,
)
from .evaluation import ConversationOutcome, distance, mean_satisfaction
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "AdapterUnavailableError",
    "BlockType",
    "BoundingBox",
    "ConflictError",
    "ConversationOutcome",
    "Document",
    "EngineError",
    "InvalidError",
    "LayoutBlock",
    "NotFoundError",
    "Page",
    "ProcessingState",
    "RetrievalResult",
    "SchemaError",
    "Workspace",
    "distance",
    "label_naive_retrieve",
    "mean_satisfaction",
    "naive_retrieve",
    "register_strategy",
    "symbiotic_retrieve",
    "__version__",
]
