#!/usr/bin/env python
from setuptools import setup
from forestmfg import __version__ as version


def fread(filepath):
    with open(filepath, 'r') as f:
        return f.read()


setup(
    name='forest-mfg',
    version=version,
    include_package_data=True,
    zip_safe=False,
    entry_points={
        'console_scripts': [
            'forestmfg = forestmfg.cli:main',
        ]
    },
    classifiers=[
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Programming Language :: Python :: Implementation :: CPython',
        'License :: OSI Approved :: BSD License',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    license="BSD (3 clause)",
    description='Mean-field-game deforestation policies under heterogeneous religious beliefs: '
                'equilibria, simulation, structural estimation and an exposure instrument',
    long_description=fread('README.rst'),
    packages=['forestmfg'],
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.20',
        'scipy>=1.7',
        'pandas>=1.5',
        'statsmodels>=0.13',
    ],
    test_suite="tests",
)
