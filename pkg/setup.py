"""Build script: compiles the optional KDE kernel extension when Cython is available.

The package is fully functional without the extension; a numpy fallback is
selected at import time.  Any failure while building the extension degrades
to a pure-Python install instead of aborting.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("ratio-convexity: Cython not found, skipping compiled kernels", file=sys.stderr)
        return []
    ext = Extension(
        "ratio_convexity.kernels._kde_cy",
        sources=["src/ratio_convexity/kernels/_kde_cy.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


class optional_build_ext(build_ext):
    """Best-effort build: compiler trouble must not block a pure install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any toolchain failure is non-fatal
            print(f"ratio-convexity: extension build skipped ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"ratio-convexity: building {ext.name} failed ({exc}); "
                  "falling back to the numpy kernels", file=sys.stderr)


setup(ext_modules=_extensions(), cmdclass={"build_ext": optional_build_ext})
