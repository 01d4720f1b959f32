"""Hot-path kernels with automatic compiled/interpreted selection.

``_kernels`` is written in Cython pure-Python mode: when the compiled
extension is present the import machinery picks it up, otherwise the same
source runs interpreted.  Results are bit-identical either way (verified
by tests); only speed differs.
"""

from lumenwave.core import _kernels as kernels

COMPILED = bool(kernels.is_compiled())


def load_interpreted():
    """Force-load the interpreted variant of the kernel module.

    Used by the backend benchmark and the parity tests; normal code should
    import :mod:`lumenwave.core.kernels` and take what it gets.
    """
    import importlib.util
    import os

    path = os.path.join(os.path.dirname(__file__), "_kernels.py")
    spec = importlib.util.spec_from_file_location("lumenwave.core._kernels_py", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module
