"""Hot-kernel backend selection.

Tries the compiled Cython extension first and falls back to the numpy
implementations.  ``STYLEBAKE_BACKEND`` forces the choice: ``compiled``
(raise if unavailable) or ``python``.  Both backends are bit-identical by
contract; tests/test_backend_equivalence.py enforces this.
"""
from __future__ import annotations

import os

from . import pyfallback

_forced = os.environ.get("STYLEBAKE_BACKEND", "").strip().lower()

_impl = None
if _forced in ("", "compiled"):
    try:
        from . import _ext as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = None
        if _forced == "compiled":
            raise ImportError(
                "STYLEBAKE_BACKEND=compiled but the extension is not built; "
                "run `python setup.py build_ext --inplace`"
            )
elif _forced != "python":
    raise ValueError(f"STYLEBAKE_BACKEND must be 'compiled' or 'python', got {_forced!r}")

if _impl is None:
    _impl = pyfallback
    BACKEND = "python"
else:
    BACKEND = "compiled"

conv3x3_acc = _impl.conv3x3_acc
raster_tris = _impl.raster_tris
reproject_accum = _impl.reproject_accum
knn_fill = _impl.knn_fill


def active_backend() -> str:
    return BACKEND
