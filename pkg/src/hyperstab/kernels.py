"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly; otherwise the numpy
versions in ``_pykernels`` take over.  Setting ``HYPERSTAB_PURE_PYTHON=1``
forces the fallback, which is how the benchmark and the backend-agreement
tests reach both implementations.
"""

from __future__ import annotations

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("HYPERSTAB_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # no toolchain at install time
        compiled_backend = None

active_backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND_NAME = "compiled" if compiled_backend is not None else "python"

conjugacy_class_labels = active_backend.conjugacy_class_labels
pair_class_histogram = active_backend.pair_class_histogram
support_closure = active_backend.support_closure

__all__ = [
    "BACKEND_NAME",
    "compiled_backend",
    "python_backend",
    "conjugacy_class_labels",
    "pair_class_histogram",
    "support_closure",
]
