"""Select the stepping kernel: compiled if available, else pure Python.

Set ``HGVM_PURE_PYTHON=1`` to force the fallback.
"""

import os

BACKEND = "python"
if os.environ.get("HGVM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._kernel import advance, locate  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        from ._kernel_py import advance, locate
else:
    from ._kernel_py import advance, locate

from ._kernel_py import STATUS_DONE, STATUS_EVENT, STATUS_NONFINITE  # noqa: E402

__all__ = ["advance", "locate", "BACKEND", "STATUS_DONE", "STATUS_EVENT", "STATUS_NONFINITE"]
