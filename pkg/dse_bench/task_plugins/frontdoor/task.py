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
from dse_bench.task_plugins.cvgae import generators
from dse_bench.task_plugins.explainers import explainers
from dse_bench.task_plugins.frontdoor import estimators
from dse_bench.task_plugins.predictor import model


class Runner(models.Task):

    """ Removal and surrogate importance of every explanation mask. """

    log = logging.getLogger("task_plugins.frontdoor.task.Runner")

    artifacts = (common.RECORDS,)
    section = 'dse'

    def __init__(self, experiment, plugin_config, stage_name):
        super(Runner, self).__init__(experiment, plugin_config, stage_name)
        self.records = None
        self.cfg = None
        self.predictor = None
        self.generator = None
        self.masks = None
        self.dataset = None

        # Define the number of steps we will do to determine our progress.
        self.total_steps = 3

    def do_job_steps(self):
        self.log.info('Step 1: Load predictor, generator and masks')
        self._load_inputs()
        self.log.info('Step 2: Estimate importances')
        self._evaluate()
        self.log.info('Step 3: Write importance records')
        self._write_records()

    @common.task_step
    def _load_inputs(self):
        self.cfg = estimators.DseConfig.from_dict(self.plugin_config)
        self.predictor = model.Predictor.load(self.require(common.PREDICTOR))
        self.generator = generators.load_generator(
            self.require(common.GENERATOR))
        self.masks = explainers.read_masks(self.require(common.MASKS))
        self.dataset = self.load_dataset()

    @common.task_step
    def _evaluate(self):
        self.records = estimators.evaluate_all(
            self.dataset, self.masks, self.predictor, self.generator,
            self.cfg, pool=self.experiment.pool)

    @common.task_step
    def _write_records(self):
        estimators.write_records(self.records, self.path(common.RECORDS))
        self._get_work_data()['records'] = len(self.records)
