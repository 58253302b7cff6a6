import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FLOWBOX_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "flowbox._ckernels",
                    ["src/flowbox/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # no Cython: the numpy fallback is used at import time
        ext_modules = []

setup(ext_modules=ext_modules)
