"""Head and body yaw estimation from low-resolution overhead point clouds,
with conversation attention analysis on the resulting yaw timelines."""

from .config import DEFAULT, Config
from .core import DataError, GeometryError, parse_session, write_session

__version__ = "0.1.0"

__all__ = ["Config", "DEFAULT", "DataError", "GeometryError", "parse_session",
           "write_session", "__version__"]
