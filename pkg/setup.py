"""Build hook for the optional compiled kernels.

The package works without them: ``mosaicverify._accel`` falls back to the
pure-Python kernels when the extension is missing.
"""
import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as e:  # noqa: BLE001 - any compiler failure
            print("warning: compiled kernels not built (%s); using the pure-Python fallback" % e)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as e:  # noqa: BLE001
            print("warning: %s not built (%s)" % (ext.name, e))


def extensions():
    if os.environ.get("MOSAIC_VERIFY_PURE"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(["src/mosaicverify/_kernels.pyx"], language_level=3, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
