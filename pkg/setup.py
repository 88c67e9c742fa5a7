"""Build the optional compiled kernels; the package runs without them."""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("WMLAB_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("wmlab._kernels", ["src/wmlab/_kernels.pyx"])],
            compiler_directives={"language_level": 3},
            quiet=True,
        )

setup(ext_modules=ext_modules)
