"""Numerical lab for the spinorial Yamabe equation on surfaces"""

import os
from setuptools import setup

__version__ = None
with open(os.path.join(os.path.dirname(__file__),
                       "sylab", "__init__.py")) as f:
    for line in f:
        if line.startswith("__version__"):
            exec(line)
            break

assert __version__, "Could not determine version"


classifiers = [
    "Development Status :: 3 - Alpha",
    "License :: OSI Approved :: BSD License",
    "Intended Audience :: Science/Research",
    "Operating System :: OS Independent",
    "Programming Language :: Python",
    "Programming Language :: Python :: 3",
    "Programming Language :: Python :: 3.9",
    "Programming Language :: Python :: 3.10",
    "Programming Language :: Python :: 3.11",
    "Programming Language :: Python :: 3.12",
    "Topic :: Scientific/Engineering :: Mathematics",
    "Topic :: Scientific/Engineering :: Physics",
]


setup(
    name="sylab",
    version=__version__,
    description=__doc__,
    keywords="Dirac operator spinor nonlinear Nehari curvature",
    long_description=__doc__,
    license="BSD",
    zip_safe=False,
    packages=["sylab"],
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy>=1.12",
    ],
    extras_require={
        "tests": [
            "pynose",
            "flaky<3.8",
            "coverage",
        ],
        "docs": [
            "sphinx",
            "sphinxcontrib-napoleon",
        ],
    },
    entry_points={
        "console_scripts": [
            "sylab = sylab.cli:main",
        ],
    },
    classifiers=classifiers,
)
