"""Build script.

The compiled core (potbal.accel._fast) is optional: if Cython or a C
compiler is unavailable the build degrades to the pure-numpy backend,
which implements the identical algorithms.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Try to build the Cython core; fall back to pure python on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover
            print(f"warning: compiled core not built ({exc}); "
                  "pure-python backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover
            print(f"warning: building {ext.name} failed ({exc}); "
                  "pure-python backend will be used")


ext_modules = []
cmdclass = {}
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "potbal.accel._fast",
                ["src/potbal/accel/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    cmdclass = {"build_ext": OptionalBuildExt}
except ImportError:  # pragma: no cover
    print("warning: Cython/numpy not available at build time; "
          "pure-python backend will be used")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
