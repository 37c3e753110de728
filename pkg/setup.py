"""Build script: compiles the optional Cython sampling kernel.

The compiled kernel is a pure accelerator. If Cython or a C compiler is
missing, the install falls back to the numpy kernel and everything keeps
working (slower, same bit-identical output).
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Never fail the install because the accelerator would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"twinbeam: skipping compiled kernel ({exc!r})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"twinbeam: skipping {ext.name} ({exc!r})")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("twinbeam: Cython not available, installing without compiled kernel")
        return []
    ext = Extension(
        "twinbeam.sampler._kernel_cy",
        ["src/twinbeam/sampler/_kernel_cy.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
