"""Entity linking of short texts against a Wikipedia-like knowledge base."""

__version__ = "0.1.0"
