from setuptools import Extension, setup
from Cython.Build import cythonize

ext = Extension(
    "sihsim._walkcore",
    ["src/sihsim/_walkcore.pyx"],
    extra_compile_args=["-O3"],
)

setup(ext_modules=cythonize([ext], language_level=3))
