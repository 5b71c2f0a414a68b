import os

from setuptools import Extension, setup


def extensions():
    # WINKLER_EKI_NO_EXT=1 skips the compiled core; the package then runs on
    # the pure-NumPy fallback selected at import time.
    if os.environ.get("WINKLER_EKI_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "winkler_eki._kernels._band_c",
        ["src/winkler_eki/_kernels/_band_c.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions())
