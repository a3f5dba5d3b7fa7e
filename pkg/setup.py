import os

from setuptools import setup

ext_modules = []
if os.environ.get("DCSPLIT_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "dcsplit._kernels",
                    ["src/dcsplit/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython/numpy at build time: install the pure-Python package only;
        # the batched numpy kernels are selected at import.
        ext_modules = []

setup(ext_modules=ext_modules)
