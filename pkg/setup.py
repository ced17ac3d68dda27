#!/usr/bin/env python
"""Setup script for the Bergman kernel laboratory."""

from setuptools import setup, find_packages

setup(
    name="bergman-lab",
    version="0.1.0",
    description="Numerical laboratory for semiclassical Bergman kernel expansions",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "numpy>=1.19.0",
        "scipy>=1.6.0",
        "pandas>=1.5.0",
    ],
    entry_points={
        "console_scripts": [
            "bergman-lab=bergman_lab.main:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.8",
)
