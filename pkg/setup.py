import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "enamle._kernels",
    ["src/enamle/_kernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    optional=True,
)

setup(ext_modules=cythonize([ext], language_level=3))
