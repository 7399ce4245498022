"""Build script for the optional compiled search kernels.

The package is pure Python except for mvalloc._kernels, a Cython twin of
mvalloc._kernels_py.  When Cython or a C compiler is unavailable (or
MVALLOC_PURE_PYTHON=1 is set) the extension is simply skipped and the
package falls back to the Python kernels at import time.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Skip the extension instead of failing the whole install."""

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # compiler missing or broken
            print("skipping compiled kernels: %s" % exc)

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            print("skipping %s: %s" % (ext.name, exc))


ext_modules = []
if os.environ.get("MVALLOC_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("mvalloc._kernels", ["src/mvalloc/_kernels.pyx"])],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
