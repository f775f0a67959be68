import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:             # the pure-Python kernels are used instead
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("RAILODE_NO_EXT") != "1":
    ext_modules = cythonize(
        [Extension("railode._kernels", ["src/railode/_kernels.pyx"], language="c++",
                   extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"])],
        compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
