"""Certification toolkit for qudit Bell and steering scenarios.

``QCERT_THREADS`` caps the BLAS/OpenMP thread pools; it must be set before
numpy is first imported, so it is applied here.
"""

import os as _os

_threads = _os.environ.get("QCERT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
