"""Build the optional compiled trial kernel.

Without Cython or a C compiler the package installs as pure Python and
the simulator uses its fallback kernel.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("KWHCHECK_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            ["src/kwhcheck/simulator/_vm_ext.pyx"],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
