"""Kernel backend selection.

The compiled kernel is preferred when importable; set TWINBEAM_BACKEND to
"python" or "cython" to force a choice (forcing "cython" raises if the
extension is missing). Both backends produce bit-identical output, so the
choice only affects speed.
"""

from __future__ import annotations

import os

from . import _kernel_py

_FORCED = os.environ.get("TWINBEAM_BACKEND", "").strip().lower()

_kernel_cy = None
if _FORCED != "python":
    try:
        from . import _kernel_cy  # type: ignore[no-redef]
    except ImportError:
        _kernel_cy = None
        if _FORCED == "cython":
            raise ImportError(
                "TWINBEAM_BACKEND=cython but the compiled kernel is not built; "
                "reinstall with a C compiler and Cython available"
            )

if _kernel_cy is not None:
    sample_chunk = _kernel_cy.sample_chunk
    ACTIVE_BACKEND = "cython"
else:
    sample_chunk = _kernel_py.sample_chunk
    ACTIVE_BACKEND = "python"


def available_backends() -> dict[str, object]:
    """Mapping of backend name to its sample_chunk callable."""
    backends: dict[str, object] = {"python": _kernel_py.sample_chunk}
    if _kernel_cy is not None:
        backends["cython"] = _kernel_cy.sample_chunk
    return backends
