from setuptools import setup

# The LSTM kernels compile to a C extension; the package falls back to the
# numpy implementation at import time if the extension is unavailable.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/skyoff/forecast/_lstm_cy.pyx"],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
