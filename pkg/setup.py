"""Build script.

The compiled kernel module is optional: if Cython or a C compiler is not
available the install falls back to the pure numpy/scipy implementations
in pointchannels._kernels_py and everything still works.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that downgrades compiler failures to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn("skipping compiled kernels (%s); using pure python fallback" % exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn("failed to build %s (%s); using pure python fallback" % (ext.name, exc))


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("pointchannels._kernels_cy", ["src/pointchannels/_kernels_cy.pyx"])],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
