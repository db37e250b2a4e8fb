from .logger import LossLogger
from .utils import apply_overrides, parse_override, set_by_path

__all__ = [
    "LossLogger",
    "apply_overrides",
    "parse_override",
    "set_by_path",
]
