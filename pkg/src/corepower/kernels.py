"""Backend selection for the structure-table kernel.

The compiled extension is used when it was built; set ``COREPOWER_PURE_PYTHON=1``
to force the pure-Python loop.
"""

import os

import numpy as np

from . import _pykernels

N_COLUMNS = 7

if os.environ.get("COREPOWER_PURE_PYTHON") == "1":
    _impl = _pykernels.structure_energy_sums
    BACKEND = "python"
else:
    try:
        from ._ckernels import structure_energy_sums as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels.structure_energy_sums
        BACKEND = "python"


def structure_energy_sums(table, offsets, e_bit_read, e_bit_write, p_leak_bit, factor,
                          impl=None):
    """Return per-segment (dynamic pJ, leakage uW) arrays for a stacked structure table."""
    table = np.ascontiguousarray(table, dtype=np.float64).reshape(-1, N_COLUMNS)
    offsets = np.ascontiguousarray(offsets, dtype=np.intp)
    nseg = len(offsets) - 1
    out_dyn = np.zeros(nseg)
    out_leak = np.zeros(nseg)
    (impl or _impl)(table, offsets, float(e_bit_read), float(e_bit_write), float(p_leak_bit),
                    float(factor), out_dyn, out_leak)
    return out_dyn, out_leak


def python_impl():
    return _pykernels.structure_energy_sums


def compiled_impl():
    """The compiled kernel, or None when the extension is unavailable."""
    try:
        from ._ckernels import structure_energy_sums as impl
    except ImportError:
        return None
    return impl
