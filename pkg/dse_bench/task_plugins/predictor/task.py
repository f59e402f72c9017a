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

from dse_bench.lib import common
from dse_bench.lib import models
from dse_bench.task_plugins.predictor import model


class Runner(models.Task):

    """ Train the graph classifier and checkpoint it. """

    log = logging.getLogger("task_plugins.predictor.task.Runner")

    artifacts = (common.PREDICTOR,)
    section = 'predictor'

    def __init__(self, experiment, plugin_config, stage_name):
        super(Runner, self).__init__(experiment, plugin_config, stage_name)
        self.predictor = None

        # Define the number of steps we will do to determine our progress.
        self.total_steps = 2

    def do_job_steps(self):
        self.log.info('Step 1: Train predictor')
        self._train()
        self.log.info('Step 2: Save predictor checkpoint')
        self._save()

    @common.task_step
    def _train(self):
        cfg = model.PredictorConfig.from_dict(self.plugin_config)
        self.predictor = model.train(self.load_dataset(), cfg)

    @common.task_step
    def _save(self):
        self.predictor.save(self.path(common.PREDICTOR))
        work_data = self._get_work_data()
        work_data['train_accuracy'] = self.predictor.metrics['train_accuracy']
        work_data['test_accuracy'] = self.predictor.metrics['test_accuracy']
