"""Backend selection for the per-cycle glottal kernels.

Prefers the compiled extension when built; falls back to the numpy
implementation transparently. Set ``GLOTFIT_PURE_PYTHON=1`` to force the
fallback (used by the backend-parity tests and the benchmark).
"""

from __future__ import annotations

import os

if os.environ.get("GLOTFIT_PURE_PYTHON"):
    from . import _lfcore_py as _impl
else:
    try:
        from . import _lfcore as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _lfcore_py as _impl

BACKEND: str = _impl.BACKEND
solve_mu = _impl.solve_mu
solve_lambda = _impl.solve_lambda
fill_cycle = _impl.fill_cycle
