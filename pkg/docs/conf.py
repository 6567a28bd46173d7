# -*- coding: utf-8 -*-
#
# forest-mfg documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

from forestmfg import __version__  # noqa: E402

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'forest-mfg'
copyright = u'2026, forest-mfg developers'

version = '.'.join(__version__.split('.')[:2])
release = __version__

exclude_patterns = ['_build', '_*.rst']
pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = 'default'

on_rtd = os.environ.get('READTHEDOCS', None) == 'True'

if not on_rtd:
    try:
        import sphinx_rtd_theme
    except ImportError:
        pass
    else:
        html_theme = 'sphinx_rtd_theme'

html_static_path = []
htmlhelp_basename = 'forestmfgdoc'

# -- Options for LaTeX and manual page output ------------------------------

latex_documents = [
    ('index', 'forestmfg.tex', u'forest-mfg Documentation', u'forest-mfg developers', 'manual'),
]

man_pages = [
    ('index', 'forestmfg', u'forest-mfg Documentation', [u'forest-mfg developers'], 1),
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'pandas': ('https://pandas.pydata.org/docs', None),
}
