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


import logging
import os

import fixtures
import testtools

from dse_bench import experiment

logging.basicConfig(level=logging.DEBUG,
                    format='%(asctime)s %(name)-32s '
                    '%(levelname)-8s %(message)s')


class TestWithExperiment(testtools.TestCase):

    log = logging.getLogger("TestWithExperiment")

    def setUp(self):
        super(TestWithExperiment, self).setUp()
        self.config = None
        self.experiment = None

    def start_experiment(self):
        if not self.config:
            self._load_config_fixture()
        self.experiment = experiment.Experiment(self.config,
                                                setup_logging=False)
        return self.experiment

    def tearDown(self):
        if self.experiment and not self.experiment.stopped():
            self.experiment.shutdown()
        super(TestWithExperiment, self).tearDown()

    def _load_config_fixture(self, config_name='config.yaml'):
        config_dir = os.path.join(os.path.dirname(__file__), 'etc')
        self.config = experiment.load_config(os.path.join(config_dir,
                                                          config_name))

        # Set all of the working dirs etc to a writeable temp dir
        temp_path = self.useFixture(fixtures.TempDir()).path
        for config_dir in ['run_dir', 'debug_log']:
            if config_dir in self.config:
                self.config[config_dir] = os.path.join(
                    temp_path, os.path.basename(self.config[config_dir]))
        if (self.config.get('publish_results') or {}).get('type') == 'local':
            self.config['publish_results']['path'] = os.path.join(
                temp_path, 'published')
        return temp_path
