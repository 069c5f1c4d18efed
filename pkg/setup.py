import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # build the pure-Python fallback only
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "nrbous._triad",
                ["src/nrbous/_triad.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fcx-limited-range"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
