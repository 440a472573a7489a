"""Version information for ealm."""

__version__ = "0.1.0"
