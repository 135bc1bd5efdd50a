"""gract: resource-aware active objects with graded types and a bounded explorer."""

__version__ = "0.1.0"
