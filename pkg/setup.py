"""Build the optional compiled kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("HGVM_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(["src/hgvm_qbc/_kernel.pyx"], quiet=True)
        for ext in ext_modules:
            ext.optional = True  # a failed compile falls back to pure Python

setup(ext_modules=ext_modules)
