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


import hashlib
import logging
import os
import shutil

import git


log = logging.getLogger('lib.utils')


def setup_logging(log_file=None):
    if log_file:
        directory = os.path.dirname(log_file)
        if directory and not os.path.isdir(directory):
            os.makedirs(directory)
    logging.basicConfig(format='%(asctime)s %(name)-32s '
                        '%(levelname)-8s %(message)s',
                        filename=log_file,
                        level=logging.DEBUG)


def ensure_dir(path):
    if not os.path.isdir(path):
        os.makedirs(path)
    return path


def git_blob_hash(path):
    """ The object id git would give this file's contents. """
    with open(path, 'rb') as fd:
        data = fd.read()
    header = ('blob %d\0' % len(data)).encode('ascii')
    return hashlib.sha1(header + data).hexdigest()


def code_revision(path=None):
    """ HEAD of the checkout holding ``path``, or None outside git. """
    path = path or os.path.dirname(os.path.abspath(__file__))
    try:
        repo = git.Repo(path, search_parent_directories=True)
        revision = repo.head.commit.hexsha
        if repo.is_dirty():
            revision += '-dirty'
        return revision
    except (git.InvalidGitRepositoryError, git.NoSuchPathError, ValueError):
        log.debug('%s is not inside a git checkout' % path)
        return None


def push_file(results_set_name, file_path, publish_config):
    """ Publish a result file or directory. Returns where it went """
    method = publish_config['type'] + '_push_file'
    if method in globals() and hasattr(globals()[method], '__call__'):
        return globals()[method](results_set_name, file_path, publish_config)
    log.warning("Unknown publish type '%s'" % publish_config['type'])


def local_push_file(results_set_name, file_path, local_config):
    """ Copy the file locally somewhere sensible """
    dest_dir = os.path.join(local_config['path'], results_set_name)
    dest_filename = os.path.basename(file_path.rstrip(os.sep))
    ensure_dir(dest_dir)

    dest_file = os.path.join(dest_dir, dest_filename)

    if os.path.isfile(file_path):
        shutil.copyfile(file_path, dest_file)
    elif os.path.isdir(file_path):
        if os.path.isdir(dest_file):
            shutil.rmtree(dest_file)
        shutil.copytree(file_path, dest_file)
    return local_config.get('prepend_url', '') + \
        os.path.join(results_set_name, dest_filename)
