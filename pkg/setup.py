"""Build script: compiles the GF(p) kernel extension when a toolchain is
available, otherwise installs with the pure-Python kernels only."""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Never fail the install because the accelerator would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            self._skip(exc)

    @staticmethod
    def _skip(exc):
        print(
            f"warning: building the compiled kernels failed ({exc}); "
            "falling back to the pure-Python kernels",
            file=sys.stderr,
        )


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "interleave_forge._kernels._fastcore",
                ["src/interleave_forge/_kernels/_fastcore.pyx"],
            )
        ],
        language_level=3,
    )
except ImportError:  # pragma: no cover - cython is a build requirement
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
