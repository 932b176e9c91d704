from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("akme._core", ["src/akme/_core.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # no Cython: install the pure-Python fallback only
    ext_modules = []

setup(ext_modules=ext_modules)
