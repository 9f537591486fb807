#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# sylab documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys
sys.path.insert(0, os.path.abspath(os.path.join("..", "..")))

import sylab

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.coverage',
    'sphinx.ext.autosummary',
    'sphinx.ext.mathjax',
    'sphinxcontrib.napoleon'
]

# Add any paths that contain templates here, relative to this directory.
templates_path = ['_templates']

source_suffix = '.rst'

# The master toctree document.
master_doc = 'index'

# General information about the project.
project = 'sylab'
copyright = '2026, sylab developers'
author = 'sylab developers'

# The short X.Y version.
version = sylab.__version__
# The full version, including alpha/beta/rc tags.
release = version

language = 'en'

exclude_patterns = []

# The name of the Pygments (syntax highlighting) style to use.
pygments_style = 'sphinx'

todo_include_todos = False

# Docstrings document camelCase functions; skip their snake_case aliases
autodoc_default_options = {
    'members': True,
    'undoc-members': False,
}


# -- Options for HTML output ----------------------------------------------

html_theme = 'alabaster'
html_static_path = []
htmlhelp_basename = 'sylabdoc'


# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'sylab.tex', 'sylab Documentation',
     author, 'manual'),
]


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'sylab', 'sylab Documentation',
     [author], 1)
]


# add_module_names = False
html_show_sourcelink = False
