"""Kernel backend selection.

The coordinate-descent sweep, sparse-term scoring and chain walking are
the inner loops of the package.  A compiled Cython extension is used
when available; otherwise the pure-numpy fallbacks in ``_py`` are
selected.  Set ``MCTRACE_BACKEND=python`` or ``=cython`` to force one.
"""

import os

from . import _py

_requested = os.environ.get("MCTRACE_BACKEND", "auto").lower()

if _requested not in ("auto", "python", "cython"):
    raise RuntimeError(f"MCTRACE_BACKEND must be auto, python or cython, got {_requested!r}")

_core = None
if _requested in ("auto", "cython"):
    try:
        from . import _core
    except ImportError:
        _core = None
        if _requested == "cython":
            raise RuntimeError(
                "MCTRACE_BACKEND=cython but the compiled extension is not available"
            )

if _core is not None:
    BACKEND = "cython"
    cd_sweep = _core.cd_sweep
    eval_terms = _core.eval_terms
    walk_chain = _core.walk_chain
else:
    BACKEND = "python"
    cd_sweep = _py.cd_sweep
    eval_terms = _py.eval_terms
    walk_chain = _py.walk_chain
