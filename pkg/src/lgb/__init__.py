"""Social bot detection that fuses text semantics with graph structure."""

__version__ = "0.1.0"
