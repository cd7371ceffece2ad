"""Build the optional Cython kernels; the package falls back to pure Python without them."""
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("holorecon._ckernels", ["src/holorecon/_ckernels.pyx"], extra_compile_args=["-O2"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
