# Copyright 2024 The dse-bench Authors
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
# under the License.

# Sphinx settings for the dse-bench guide. The pipeline diagram in
# intro.rst needs seqdiag.

extensions = ['sphinxcontrib.seqdiag']

source_suffix = '.rst'
master_doc = 'index'

project = u'dse-bench'
copyright = u'2024, The dse-bench Authors'
version = release = '0.1'

exclude_patterns = []
pygments_style = 'sphinx'

html_theme = 'default'
htmlhelp_basename = 'dse-benchdoc'

man_pages = [
    ('index', 'dse-bench', u'dse-bench Documentation',
     [u'The dse-bench Authors'], 1)
]
