"""Select the compiled kernel module when available.

Set ``HOLORECON_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _pykernels as python_kernels

compiled_kernels = None
if os.environ.get("HOLORECON_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:  # extension not built
        compiled_kernels = None

active = compiled_kernels if compiled_kernels is not None else python_kernels
IMPLEMENTATION = active.IMPLEMENTATION

newton_deltas = active.newton_deltas
closed_form_table = active.closed_form_table
prefix_min_products = active.prefix_min_products
abs_products = active.abs_products
line_sums = active.line_sums
en_weights = active.en_weights
en_eval = active.en_eval
rn_eval = active.rn_eval
homogeneous_parts = active.homogeneous_parts
