"""Backend selection for the lattice kernels.

The compiled extension is used when it was built; otherwise the pure-Python
module with the identical API is loaded. Set ``COARSE_CAUSAL_PURE_PYTHON=1``
to force the fallback.
"""

import os

from . import _lattice_py

BACKENDS = {"python": _lattice_py}
try:
    from . import _lattice

    BACKENDS["cython"] = _lattice
except ImportError:
    pass

if os.environ.get("COARSE_CAUSAL_PURE_PYTHON", "") not in ("", "0"):
    BACKEND = "python"
else:
    BACKEND = "cython" if "cython" in BACKENDS else "python"

_impl = BACKENDS[BACKEND]
partition_labels = _impl.partition_labels
quotient_is_acyclic = _impl.quotient_is_acyclic
MAX_NODES = _impl.MAX_NODES
