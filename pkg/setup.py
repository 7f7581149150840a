"""Builds the optional compiled kernels; the package works without them."""
import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension("relgrid.numerics._ckernels", ["src/relgrid/numerics/_ckernels.pyx"],
              include_dirs=[numpy.get_include()], extra_compile_args=["-O3"]),
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": 3}))
