"""Application package initialization."""
