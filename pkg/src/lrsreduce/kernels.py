"""Select the compiled loops when available, else the pure-Python ones.

Set LRSREDUCE_PURE=1 to force the fallback (used by the benchmark and the
parity tests).
"""

import os

BACKEND = "python"

if os.environ.get("LRSREDUCE_PURE") != "1":
    try:
        from ._kernels import bellman_sweep, push_mass  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    from ._kernels_py import bellman_sweep, push_mass  # noqa: F401
