"""Hot kernels: compiled when the extension is built, numpy otherwise.

Set ``HOROFLOW_PURE_PYTHON=1`` to force the fallback.
"""
import os
from types import SimpleNamespace

from . import _family_py, _reduce_py

python_backend = SimpleNamespace(
    name="python",
    reduce_modular=_reduce_py.reduce_modular,
    reduce_picard=_reduce_py.reduce_picard,
    accumulate2=_family_py.accumulate2,
    accumulate3=_family_py.accumulate3,
)

compiled_backend = None
if not os.environ.get("HOROFLOW_PURE_PYTHON"):
    try:
        from . import _family, _reduce
        compiled_backend = SimpleNamespace(
            name="cython",
            reduce_modular=_reduce.reduce_modular,
            reduce_picard=_reduce.reduce_picard,
            accumulate2=_family.accumulate2,
            accumulate3=_family.accumulate3,
        )
    except ImportError:
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = backend.name

reduce_modular = backend.reduce_modular
reduce_picard = backend.reduce_picard
accumulate2 = backend.accumulate2
accumulate3 = backend.accumulate3
