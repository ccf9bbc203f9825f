"""Build script: compiles the optional Cython kernel for the modal RHS.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile only costs speed.  Build with
``pip install -e . --no-build-isolation``.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "bidomain.kernels._rhs",
                ["src/bidomain/kernels/_rhs.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


class optional_build_ext(build_ext):
    """Swallow compile failures; the pure-Python kernels take over."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # CompileError, DistutilsPlatformError, ...
            warnings.warn(f"C extension build failed ({exc}); using Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); using Python kernels")


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
