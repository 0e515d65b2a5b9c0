from setuptools import setup

# Metadata lives in pyproject.toml; this shim keeps `python setup.py develop` working.
setup()
