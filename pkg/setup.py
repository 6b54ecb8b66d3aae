"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure numpy fallback is selected
at import time), so a failed compile degrades to a source-only install
instead of aborting.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "mcis.kernels._fastcore",
                ["src/mcis/kernels/_fastcore.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"warning: building without compiled kernels ({exc})")

setup(ext_modules=ext_modules)
