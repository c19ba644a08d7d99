# Sphinx configuration of the kerr-coupler documentation
import os
import sys

sys.path.insert(0, os.path.abspath('..'))

import kerr_coupler  # noqa: E402

project = 'kerr-coupler'
copyright = '2026, kerr_coupler developers'
author = 'kerr_coupler developers'
version = release = kerr_coupler.__version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.viewcode',
    'sphinxcontrib.asyncio',
    'sphinx_autodoc_typehints',
]
autodoc_member_order = 'bysource'

source_suffix = '.rst'
master_doc = 'index'
exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'alabaster'
html_show_sphinx = False
htmlhelp_basename = 'kerr-couplerdoc'

man_pages = [
    (master_doc, 'kerr-coupler', 'kerr-coupler Documentation', [author], 1),
]
