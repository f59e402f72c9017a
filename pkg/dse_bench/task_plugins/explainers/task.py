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
from dse_bench.task_plugins.explainers import explainers
from dse_bench.task_plugins.predictor import model


class Runner(models.Task):

    """ Explain the evaluation graphs with every configured explainer. """

    log = logging.getLogger("task_plugins.explainers.task.Runner")

    artifacts = (common.MASKS,)
    section = 'explainers'

    def __init__(self, experiment, plugin_config, stage_name):
        super(Runner, self).__init__(experiment, plugin_config, stage_name)
        self.masks = None
        self.kinds = None
        self.cfg = None
        self.target_mode = 'label'
        self.predictor = None
        self.graphs = []

        # Define the number of steps we will do to determine our progress.
        self.total_steps = 3

    def do_job_steps(self):
        self.log.info('Step 1: Load predictor and select graphs')
        self._load_inputs()
        self.log.info('Step 2: Run explainers')
        self._explain()
        self.log.info('Step 3: Write masks')
        self._write_masks()

    @common.task_step
    def _load_inputs(self):
        section = dict(self.plugin_config)
        self.kinds = list(section.pop('kinds', explainers.KINDS))
        count = int(section.pop('evaluation_graphs', 200))
        self.cfg = explainers.ExplainerConfig.from_dict(section)
        self.target_mode = (self.experiment.config.get('dse') or {}).get(
            'target', 'label')
        self.predictor = model.Predictor.load(self.require(common.PREDICTOR))
        self.graphs = explainers.select_evaluation_graphs(
            self.load_dataset(), self.predictor, count)

    @common.task_step
    def _explain(self):
        self.masks = explainers.explain_dataset(
            self.predictor, self.graphs, self.kinds, self.cfg,
            self.target_mode, pool=self.experiment.pool)

    @common.task_step
    def _write_masks(self):
        config = self.cfg.to_dict()
        config.pop('kind')
        explainers.write_masks(self.masks, self.path(common.MASKS), config)
        work_data = self._get_work_data()
        work_data['graphs'] = len(self.graphs)
        work_data['explainers'] = self.kinds
