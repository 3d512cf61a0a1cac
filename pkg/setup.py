#!/usr/bin/env python
from pathlib import Path

from setuptools import setup


def get_version():
    ini_path = Path(__file__).parent / "parastack" / "__init__.py"
    for line in ini_path.open():
        if line.startswith("__version__"):
            return line.split("=")[1].strip("' \"\n")
    raise ValueError(f"__version__ line not found in {ini_path}")


long_description = """
Parastack simulates spontaneous parametric down-conversion in random
one-dimensional layered structures.

Random LiNbO3/SiO2 stacks are generated from a seed, their
transmission peaks are located with transfer matrices, and the
two-photon amplitudes they produce are analysed: Schmidt
decomposition, temporal amplitude, photon fluxes, Hong-Ou-Mandel and
Franson interferometers. Monte Carlo campaigns over thousands of
structures can be sharded and merged.
"""

description = "Photon pairs from random layered structures"

setup(
    name="parastack",
    version=get_version(),
    description=description,
    long_description=long_description,
    license="MIT",
    packages=["parastack"],
    install_requires=[
        "numpy",
        "scipy",
        "tabulate",
    ],
    extras_require={
        "pandas": ["pandas"],
    },
    entry_points={
        "console_scripts": [
            "parastack = parastack.cli:run",
        ],
    },
)
