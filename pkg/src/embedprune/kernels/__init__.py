"""Kernel backend selection.

The compiled Cython core is used when it was built; otherwise the numpy
reference implementation takes over. Setting ``PEP_PURE_PYTHON=1`` forces
the numpy backend regardless (useful for debugging and for the
``benchmarks/bench_kernels.py`` comparison).

Training runs are deterministic within a backend. Across backends, single
kernel calls agree to float tolerance but whole training trajectories can
drift in the last digits because summation orders differ.
"""

import os

from embedprune.kernels import pyref

if os.environ.get("PEP_PURE_PYTHON"):
    impl = pyref
else:
    try:
        from embedprune.kernels import _core as impl  # type: ignore[no-redef]
    except ImportError:
        impl = pyref


def available_backends():
    """Return the list of importable kernel backends."""
    backends = [pyref]
    try:
        from embedprune.kernels import _core

        backends.append(_core)
    except ImportError:
        pass
    return backends


backend_name = impl.backend_name
sigmoid = impl.sigmoid
soft_threshold = impl.soft_threshold
soft_threshold_backward = impl.soft_threshold_backward
fm_forward = impl.fm_forward
fm_backward = impl.fm_backward
scatter_add_rows = impl.scatter_add_rows
scatter_add_vec = impl.scatter_add_vec
adam_update = impl.adam_update
adam_update_masked = impl.adam_update_masked
