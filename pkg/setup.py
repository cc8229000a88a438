"""Build script: compiles the optional Cython kernels if Cython is available.

The package is fully functional without the extension (pure-Python kernels in
nkamg._kernels_py are used as a fallback), so any failure here is non-fatal.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/nkamg/_kernels_cy.pyx",
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": 3,
        },
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        if sys.platform != "win32":
            ext.extra_compile_args.append("-O3")
except Exception as exc:  # noqa: BLE001 - building without the ext is fine
    print(f"nkamg: skipping Cython extension ({exc!r}); "
          "pure-Python kernels will be used", file=sys.stderr)

setup(ext_modules=ext_modules)
