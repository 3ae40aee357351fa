#!/usr/bin/env python
from setuptools import setup, find_packages
import os

version_path = os.path.join('wfbench', '_version.py')
exec(open(version_path).read())

LONG_DESCRIPTION = """
A workbench for website fingerprinting countermeasures: trace handling,
representative trace selection, clustering, traffic morphing, baseline
defenses, attack classifiers and a closed-world evaluation harness.
"""

setup(
    name='wfbench',
    version=__version__,
    license='bsd',
    description='Website Fingerprinting Defense Workbench',
    long_description=LONG_DESCRIPTION,
    packages=find_packages(),
    install_requires=[
        'numpy',
        'scipy',
        'numba > 0.46',
        'h5py',
        'sparse',
        'click >= 7.0',
        'tqdm',
    ],
    package_dir={'wfbench': 'wfbench'},
    entry_points={
        'console_scripts': [
            'wfbench = wfbench.cli:main',
        ],
    },

    classifiers=[
        'Intended Audience :: Science/Research',
        'Topic :: Security',
        'Topic :: System :: Networking',

        'License :: OSI Approved :: BSD License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
    ],

    python_requires='>=3.7',
)
