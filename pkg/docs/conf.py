# -*- coding: utf-8 -*-
#
# wfbench documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sphinx_rtd_theme

from wfbench import __version__

# The short X.Y version.
version = __version__
# The full version, including alpha/beta/rc tags.
release = __version__

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.intersphinx',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx.ext.doctest',
]

napoleon_include_init_with_doc = False

# you have to list all files with automodule here
autosummary_generate = ['wfbench', 'tools', 'cli']

source_suffix = '.rst'
master_doc = 'index'

project = u'wfbench'
copyright = u'2020, the wfbench developers'

exclude_patterns = ['_build']

pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = "sphinx_rtd_theme"
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
html_theme_options = dict(
    navigation_depth=4,
)
html_static_path = []
htmlhelp_basename = 'wfbenchdoc'

# -- Options for LaTeX output ---------------------------------------------

latex_documents = [
    ('index', 'wfbench.tex', u'wfbench Documentation',
     u'wfbench developers', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'wfbench', u'wfbench Documentation',
     [u'wfbench developers'], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'sparse': ('https://sparse.pydata.org/en/latest', None),
    'numpy': ('https://docs.scipy.org/doc/numpy', None),
    'numba': ('https://numba.pydata.org/numba-doc/dev', None),
}
