"""Build script for the optional compiled search kernel.

The package is pure Python plus one Cython extension (visrag.hnsw._core)
holding the graph-traversal hot loops. If Cython or a C++ toolchain is
unavailable the build falls through and the pure-Python fallback backend
is selected at import time instead.
"""

import os
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that downgrades compilation failure to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing entirely
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        sys.stderr.write(
            "WARNING: building the compiled search kernel failed (%s); "
            "the pure-Python fallback will be used.\n" % (exc,)
        )


def extensions():
    if os.environ.get("VISRAG_SKIP_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        sys.stderr.write("WARNING: %s; skipping compiled kernel.\n" % (exc,))
        return []
    ext = Extension(
        "visrag.hnsw._core",
        sources=["src/visrag/hnsw/_core.pyx"],
        language="c++",
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3", "-std=c++11"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
