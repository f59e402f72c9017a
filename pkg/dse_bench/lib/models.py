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


class StageCancelled(Exception):
    pass


class Task(object):
    """ A base object for running one pipeline stage (aka Task) """
    log = logging.getLogger("lib.models.Task")

    # Files (relative to the run dir) this stage produces; when they all
    # exist the stage is treated as done and skipped on resume.
    artifacts = ()

    # Top level config section handed over as plugin_config
    section = None

    def __init__(self, experiment, plugin_config, stage_name):
        self.experiment = experiment
        self.plugin_config = plugin_config if plugin_config is not None \
            else {}
        self.stage_name = stage_name
        self._reset()

        # Define the number of steps we will do to determine our progress.
        self.total_steps = 0

    def _reset(self):
        self.work_data = None
        self.cancelled = False
        self.success = True
        self.skipped = False
        self.messages = []
        self.current_step = 0

    def path(self, *parts):
        return self.experiment.path(*parts)

    def require(self, *parts):
        """ Path of an upstream artifact, which must already exist. """
        path = self.path(*parts)
        if not os.path.exists(path):
            raise common.MissingArtifactError(
                path, 'run the stage that produces it first')
        return path

    def load_dataset(self):
        """ The run's dataset, parsed once per experiment. """
        path = self.require(common.DATASET)
        cache = self.experiment.cache
        if path not in cache:
            cache[path] = graphs.read_dataset(path)
        return cache[path]

    def is_complete(self):
        return bool(self.artifacts) and all(
            os.path.exists(self.path(a)) for a in self.artifacts)

    def start_job(self):
        self._reset()
        try:
            if self.experiment.config.get('resume', True) and \
                    self.is_complete():
                self.log.info('Stage %s already complete, resuming past it'
                              % self.stage_name)
                self.skipped = True
            else:
                self.do_job_steps()
            self._send_final_results()
        except Exception as e:
            self.log.exception('Exception running stage %s.'
                               % self.stage_name)
            self.success = False
            self.messages.append('Exception: %s' % e)
            self._send_final_results()
            raise

    def stop_working(self):
        self.log.debug("We've been asked to stop by the experiment")
        self.cancelled = True

    def do_job_steps(self):
        raise NotImplementedError()

    def _get_work_data(self):
        if self.work_data is None:
            self.work_data = dict(
                name=self.stage_name,
                artifacts=list(self.artifacts),
            )
        return self.work_data

    def _send_final_results(self):
        """ Write the stage status as <run_dir>/status/<stage>.json """
        work_data = self._get_work_data()
        work_data['steps'] = [self.current_step, self.total_steps]
        work_data['skipped'] = self.skipped
        if self.success:
            work_data['result'] = 'SUCCESS'
        else:
            work_data['result'] = '\n'.join(self.messages)
        status_dir = self.path('status')
        if not os.path.isdir(status_dir):
            os.makedirs(status_dir)
        with open(os.path.join(status_dir, '%s.json' % self.stage_name),
                  'w') as fd:
            json.dump(work_data, fd, indent=2, sort_keys=True)
        self.log.debug('Stage %s finished: %s'
                       % (self.stage_name, work_data['result']))

    def _do_next_step(self):
        """ Advance the progress counter, honouring cancellation. """

        # Each opportunity we should check if we need to stop
        if self.cancelled:
            raise StageCancelled('Stage %s cancelled' % self.stage_name)

        self.current_step += 1
        self.log.debug('%s: step %d of %d' % (self.stage_name,
                                              self.current_step,
                                              self.total_steps))
