"""Kernel backend selection.

The hot per-polygon kernels exist twice: a Cython extension
(`cutvem._kernels`) and a pure-Python mirror (`cutvem._kernels_py`). The
compiled version is preferred when importable; set CUTVEM_PURE_PYTHON=1 to
force the fallback (used by the benchmark and the backend-equivalence tests).

Exports: vem_stiffness(coords, kappa, tau), sym_eigvals(a),
stability_sigma(coords, kappa, tau), and BACKEND ("compiled" | "python").
"""

import os

if os.environ.get("CUTVEM_PURE_PYTHON"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

vem_stiffness = _impl.vem_stiffness
sym_eigvals = _impl.sym_eigvals
stability_sigma = _impl.stability_sigma
