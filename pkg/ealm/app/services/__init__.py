"""Service package initialization."""
