"""Dense tensor interface with iTEBD and belief-propagation circuit drivers."""

from .core import Context, ErrorKind, TciError, create_context, destroy_context, version
from .dense import COMPLEX, REAL, DenseTensor
from . import dense, linalg, tensor_io

__all__ = [
    "COMPLEX",
    "REAL",
    "Context",
    "DenseTensor",
    "ErrorKind",
    "TciError",
    "create_context",
    "destroy_context",
    "version",
    "dense",
    "linalg",
    "tensor_io",
]
