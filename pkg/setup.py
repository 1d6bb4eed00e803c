"""
Setup configuration for uavport
"""

from setuptools import setup, find_packages
from pathlib import Path

# The quick start guide doubles as the long description
long_description = (Path(__file__).parent / 'QUICKSTART.md').read_text(encoding='utf-8')

setup(
    name='uavport',
    version='1.0.0',
    description='UAV delivery simulator: airport AGV loops, air admission and unloading stations',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*']),
    package_data={
        'uavport.domain': ['scenarios/*.scenario'],
    },
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.9',
    install_requires=[
        'PyYAML>=6.0',
        'numpy>=1.22',
        'networkx>=2.8',
        'pandas>=1.4',
        'matplotlib>=3.5',
    ],
    extras_require={
        'dev': [
            'pytest>=7.0.0',
            'pytest-cov>=3.0.0',
        ],
    },
    entry_points={
        'console_scripts': [
            'uavport=uavport.cli.main:main',
        ],
    },
)
