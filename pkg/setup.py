"""Build script: compiles the optional fast-path extension when Cython and a
C compiler are available, and falls back to a pure-Python install otherwise."""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Never fail the install because the extension would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken toolchain, ...
            print(f"warning: skipping compiled kernels ({exc}); "
                  f"the pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  f"the pure-Python fallback will be used")


def extensions():
    if os.environ.get("LOGLENS_NO_EXT") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [
            Extension(
                "loglens._kernels._speedups",
                ["src/loglens/_kernels/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
