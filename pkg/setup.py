import io
import os

from setuptools import find_packages, setup

# Package meta-data.
NAME = 'kerr_coupler'
DESCRIPTION = ("kerr_coupler is a circuit model and spectrum engine for two "
               "transmons coupled through a nonlinear SQUID coupler, with "
               "effective Bose-Hubbard models and calibration fits.")
KEYWORDS = "transmon coupler cross-kerr bose-hubbard circuit-qed spectroscopy"
AUTHOR = 'kerr_coupler developers'
REQUIRES_PYTHON = '>=3.8.0'

REQUIRED = [
    'numpy>=1.17',
    'scipy>=1.4',
]
TESTS_REQUIRED = [
    'pytest>=6',
    'pytest-cov',
    'pytest-asyncio',
    'coverage']
DOCS_REQUIRED = [
    'sphinx',
    'sphinxcontrib-asyncio',
    'sphinx_autodoc_typehints',
]


here = os.path.abspath(os.path.dirname(__file__))

with io.open(os.path.join(here, 'README.rst'), encoding='utf-8') as f:
    long_description = '\n' + f.read()

# Load the package's __version__.py module as a dictionary.
about = {}
with open(os.path.join(here, NAME, '__version__.py')) as f:
    exec(f.read(), about)


setup(
    name=NAME,
    version=about['__version__'],
    description=DESCRIPTION,
    keywords=KEYWORDS,
    long_description=long_description,
    author=AUTHOR,
    python_requires=REQUIRES_PYTHON,
    packages=find_packages(exclude=('tests', 'tests.*')),
    install_requires=REQUIRED,
    extras_require={'tests': TESTS_REQUIRED, 'docs': DOCS_REQUIRED},
    entry_points={'console_scripts': ['kerr-coupler=kerr_coupler.cli:main']},
    include_package_data=True,
    license='MIT',
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Development Status :: 4 - Beta',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Physics',
    ],
)
