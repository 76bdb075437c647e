"""Kernel backend selection.

numba-compiled loop kernels are used when numba imports cleanly.  Setting
``BOXPLUS_DISABLE_NUMBA=1`` forces the vectorized numpy fallback, which is
also what gets used when numba is missing.
"""
import os

from . import numpy_impl

_disabled = os.environ.get("BOXPLUS_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

if _disabled:
    impl = numpy_impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - depends on environment
        impl = numpy_impl
        BACKEND = "numpy"

# numpy-only helpers shared by both backends
sinc = numpy_impl.sinc
one_minus_cos_over_sq = numpy_impl.one_minus_cos_over_sq
quat_exp = numpy_impl.quat_exp
quat_conj = numpy_impl.quat_conj
quat_canonical = numpy_impl.quat_canonical
quat_normalize = numpy_impl.quat_normalize

nu_pi = impl.nu_pi
quat_mul = impl.quat_mul
quat_olog = impl.quat_olog
quat_boxplus = impl.quat_boxplus
quat_boxminus = impl.quat_boxminus
quat_rotate = impl.quat_rotate
quat_to_matrix = impl.quat_to_matrix
matrix_to_quat = impl.matrix_to_quat
so3_exp = impl.so3_exp
so3_log = impl.so3_log
compound_boxplus = impl.compound_boxplus
compound_boxminus = impl.compound_boxminus
KIND_EUCLIDEAN = numpy_impl.KIND_EUCLIDEAN
KIND_QUATERNION = numpy_impl.KIND_QUATERNION

__all__ = [
    "BACKEND", "sinc", "one_minus_cos_over_sq", "nu_pi", "quat_mul", "quat_conj", "quat_exp",
    "quat_canonical", "quat_normalize", "quat_olog", "quat_boxplus", "quat_boxminus",
    "quat_rotate", "quat_to_matrix", "matrix_to_quat", "so3_exp", "so3_log",
    "compound_boxplus", "compound_boxminus", "KIND_EUCLIDEAN", "KIND_QUATERNION",
]
