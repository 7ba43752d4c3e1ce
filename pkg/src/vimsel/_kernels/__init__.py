"""Numerical kernels for the boosted-tree engine.

The compiled Cython scan is preferred; if the extension was not built the
NumPy implementation is selected at import time.  Both produce identical
splits, so fitted models do not depend on the backend.
"""

from __future__ import annotations

try:
    from . import _boost_cy as _impl

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _boost_np as _impl

    BACKEND = "numpy"

best_split = _impl.best_split


def available_backends() -> dict:
    """Mapping of backend name to split function, for tests and benchmarks."""
    from . import _boost_np

    backends = {"numpy": _boost_np.best_split}
    try:
        from . import _boost_cy

        backends["compiled"] = _boost_cy.best_split
    except ImportError:  # pragma: no cover
        pass
    return backends
