# Metadata and dependencies live in pyproject.toml; this shim keeps
# `python setup.py develop` working for older tooling.
from setuptools import setup

setup()
