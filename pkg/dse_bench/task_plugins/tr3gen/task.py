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

import json
import logging
import os

from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import models
from dse_bench.lib import tr3
from dse_bench.lib import utils


def write_dataset_manifest(dataset, cfg, dataset_path, path):
    manifest = dict(config=cfg.to_dict() if cfg else None,
                    num_graphs=len(dataset),
                    class_counts=tr3.class_counts(dataset),
                    motifs=dict((kind, [list(e) for e in
                                        tr3.motif_template(kind).edges])
                                for kind in tr3.MOTIF_SET),
                    dataset_hash=utils.git_blob_hash(dataset_path))
    with open(path, 'w') as fd:
        json.dump(manifest, fd, indent=2, sort_keys=True)
        fd.write('\n')
    return manifest


class Runner(models.Task):

    """ Build the TR3 dataset, or adopt the one ``data.path`` points at. """

    log = logging.getLogger("task_plugins.tr3gen.task.Runner")

    artifacts = (common.DATASET, common.DATA_MANIFEST)
    section = 'data'

    def __init__(self, experiment, plugin_config, stage_name):
        super(Runner, self).__init__(experiment, plugin_config, stage_name)
        self.cfg = None
        self.source = None
        self.dataset = None

        # Define the number of steps we will do to determine our progress.
        self.total_steps = 3

    def do_job_steps(self):
        self.log.info('Step 1: Load data configuration')
        self._load_config()
        self.log.info('Step 2: Build dataset')
        self._build_dataset()
        self.log.info('Step 3: Write dataset and manifest')
        self._write_dataset()

    @common.task_step
    def _load_config(self):
        section = dict(self.plugin_config)
        self.source = section.pop('path', None)
        if self.source is None:
            self.cfg = tr3.Tr3Config.from_dict(section)

    @common.task_step
    def _build_dataset(self):
        if self.source is not None:
            self.log.debug('Adopting dataset %s' % self.source)
            self.dataset = graphs.read_dataset(self.source)
        else:
            self.dataset = tr3.generate_dataset(self.cfg,
                                                pool=self.experiment.pool)
        if not self.dataset:
            raise graphs.EmptyInputError('dataset is empty')

    @common.task_step
    def _write_dataset(self):
        dataset_path = self.path(common.DATASET)
        utils.ensure_dir(os.path.dirname(dataset_path))
        graphs.write_dataset(self.dataset, dataset_path)
        self.experiment.cache[dataset_path] = self.dataset
        write_dataset_manifest(self.dataset, self.cfg, dataset_path,
                               self.path(common.DATA_MANIFEST))
        self._get_work_data()['num_graphs'] = len(self.dataset)
