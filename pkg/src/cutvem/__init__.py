"""CutVEM: first-order virtual element method on polygonal meshes with
stability-ratio-driven element agglomeration for embedded geometries."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: F401
