"""Kernel dispatch: compiled extension if built, numpy fallback otherwise.

Set ``VOLNET_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and the parity tests).
"""

import os

if os.environ.get("VOLNET_PURE_PYTHON"):
    from volnet import _core_py as _impl

    BACKEND = "python"
else:
    try:
        from volnet import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from volnet import _core_py as _impl

        BACKEND = "python"

egarch_sigma2 = _impl.egarch_sigma2
gjr_sigma2 = _impl.gjr_sigma2
arx_filter = _impl.arx_filter
dcc_filter = _impl.dcc_filter

__all__ = ["BACKEND", "egarch_sigma2", "gjr_sigma2", "arx_filter", "dcc_filter"]
