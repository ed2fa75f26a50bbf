# SPDX-License-Identifier: BSD-3-Clause
from datetime import date

from gashadokuro import __version__ as gashadokuro_version

project   = 'Gashadokuro'
version   = gashadokuro_version
release   = version.split('+')[0]
copyright = f'{date.today().year}, Gashadokuro Contributors'
language  = 'en'

extensions = [
	'sphinx.ext.autodoc',
	'sphinx.ext.doctest',
	'sphinx.ext.extlinks',
	'sphinx.ext.githubpages',
	'sphinx.ext.intersphinx',
	'sphinx.ext.napoleon',
	'sphinx.ext.todo',
	'myst_parser',
	'sphinx_autodoc_typehints',
	'sphinx_codeautolink',
	'sphinx_copybutton',
]

source_suffix = {
	'.rst': 'restructuredtext',
	'.md': 'markdown',
}

extlinks = {
	'pypi': ('https://pypi.org/project/%s/', '%s'),
}

pygments_style              = 'default'
pygments_dark_style         = 'monokai'
autodoc_member_order        = 'bysource'
autodoc_docstring_signature = False
todo_include_todos          = False

intersphinx_mapping = {
	'python': ('https://docs.python.org/3', None),
	'numpy': ('https://numpy.org/doc/stable', None),
	'scipy': ('https://docs.scipy.org/doc/scipy', None),
	'trimesh': ('https://trimesh.org', None),
	'construct': ('https://construct.readthedocs.io/en/latest', None),
}

napoleon_google_docstring              = False
napoleon_numpy_docstring               = True
napoleon_use_ivar                      = True
napoleon_use_admonition_for_notes      = True
napoleon_use_admonition_for_examples   = True
napoleon_use_admonition_for_references = True
napoleon_custom_sections  = [
	('Attributes', 'params_style'),
]

myst_heading_anchors = 3

always_use_bars_union = True
typehints_defaults = 'braces-after'
typehints_use_signature = True
typehints_use_signature_return = True

templates_path = [
	'_templates',
]

html_baseurl     = 'https://gashadokuro.readthedocs.io/'
html_theme       = 'furo'
html_copy_source = False

html_theme_options = {
	'light_css_variables': {
		'color-brand-primary': '#6b4e8a',
		'color-brand-content': '#6b4e8a',
	},
	'dark_css_variables': {
		'color-brand-primary': '#c3a6e0',
		'color-brand-content': '#c3a6e0',
	},
}

html_sidebars = {
	"**": [
		"sidebar/brand.html",
		"sidebar/search.html",
		"sidebar/scroll-start.html",
		"sidebar/navigation.html",
		"sidebar/scroll-end.html",
	]
}

linkcheck_retries = 2
linkcheck_workers = 1 # At the cost of speed try to prevent rate-limiting
linkcheck_anchors_ignore_for_url = [
	r'^https://github\.com/',
]

