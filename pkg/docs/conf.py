# Configuration file for the Sphinx documentation builder.
# Full list of options: https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys

sys.path.insert(0, os.path.abspath('..'))


# -- Project information -----------------------------------------------------

project = 'guidedicm'
copyright = 'Copyleft 2024, guidedicm authors'
author = 'guidedicm authors'
release = '1.0'


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.viewcode',
    'sphinx_autodoc_typehints',
    'sphinx_click.ext',
]

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

# Importing the generator pulls TensorFlow in
autodoc_mock_imports = ['tensorflow', 'keras']


# -- Options for HTML output -------------------------------------------------

html_theme = 'alabaster'
html_theme_options = {
    'page_width': '980px',
    'note_bg': '#9CF',
    'description': 'Images coded for machines, viewed by humans',
    'sidebar_collapse': True,
    'show_powered_by': False,
}


# -- Extension configuration -------------------------------------------------

intersphinx_mapping = {
    'python': ('https://docs.python.org/3/', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'pandas': ('https://pandas.pydata.org/pandas-docs/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'keras': ('https://keras.io/', None),
}
