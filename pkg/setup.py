"""Build script: compiles the optional Cython Gram core.

The package is fully functional without the extension (a blocked numpy
implementation is selected at import time), so any build failure here is
demoted to a warning rather than aborting the install.
"""

import warnings

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext = Extension(
        "pinn_spectral._fastgram",
        sources=["src/pinn_spectral/_fastgram.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # Cython or compiler missing: fall back to numpy
    warnings.warn(f"skipping compiled Gram core ({exc}); numpy fallback will be used")

setup(ext_modules=ext_modules)
