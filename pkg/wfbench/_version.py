# Kept apart from __init__.py so that setup.py can read the version without
# importing numpy, numba and the rest of the package.
__version__ = '0.3.0'
