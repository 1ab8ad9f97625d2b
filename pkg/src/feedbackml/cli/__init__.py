"""Config-driven pipeline runner (``feedbackctl``)."""
from .config import DEFAULTS, load_config
from .main import main
from .stages import Pipeline

__all__ = ["DEFAULTS", "load_config", "main", "Pipeline"]
