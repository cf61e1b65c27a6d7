"""Precise-retrieval RAG engine: semantic segmentation, exact retrieval, gradient chunk selection, self-feedback."""

__version__ = "0.1.0"
