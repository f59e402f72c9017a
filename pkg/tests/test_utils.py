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


import os

import fixtures
import testtools

from dse_bench.lib import utils


class TestGitBlobHash(testtools.TestCase):
    def test_matches_git(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        path = os.path.join(tempdir, 'hello.txt')
        with open(path, 'w') as f:
            f.write('hello\n')
        # git hash-object hello.txt
        self.assertEqual('ce013625030ba8dba906f756967f9e9ca394464a',
                         utils.git_blob_hash(path))


class TestDirs(testtools.TestCase):
    def test_makes_dir(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        self.assertFalse(os.path.exists(os.path.join(tempdir, 'foo')))
        utils.ensure_dir(os.path.join(tempdir, 'foo', 'bar'))
        self.assertTrue(os.path.isdir(os.path.join(tempdir, 'foo', 'bar')))
        utils.ensure_dir(os.path.join(tempdir, 'foo', 'bar'))

    def test_logging_makes_dir(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        utils.setup_logging(os.path.join(tempdir, 'logs', 'debug.log'))
        self.assertTrue(os.path.isdir(os.path.join(tempdir, 'logs')))


class TestPush(testtools.TestCase):
    def test_local_push_file(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        source = os.path.join(tempdir, 'report.json')
        with open(source, 'w') as f:
            f.write('{}')
        config = {'type': 'local', 'path': os.path.join(tempdir, 'www'),
                  'prepend_url': 'http://localhost/results/'}
        url = utils.push_file('run', source, config)
        self.assertEqual('http://localhost/results/run/report.json', url)
        self.assertTrue(os.path.exists(os.path.join(tempdir, 'www', 'run',
                                                    'report.json')))

    def test_unknown_type(self):
        self.assertIsNone(utils.push_file('run', '/nonexistent',
                                          {'type': 'carrier-pigeon'}))

    def test_code_revision_outside_git(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        revision = utils.code_revision(tempdir)
        self.assertTrue(revision is None or len(revision) >= 40)
