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


import collections
import logging
import os
import threading

import yaml

from dse_bench.lib import common
from dse_bench.lib import utils
from dse_bench import worker_manager


DEFAULT_PIPELINE = ('tr3gen', 'predictor', 'explainers', 'cvgae',
                    'frontdoor', 'evalharness')

# Keys holding paths, resolved against the config file's directory
PATH_KEYS = ('run_dir', 'debug_log', 'conf_d')


def load_config(path):
    """ Parse a YAML experiment config and anchor its relative paths. """
    with open(path, 'r') as config_stream:
        config = yaml.safe_load(config_stream) or {}
    if not isinstance(config, dict):
        raise common.ConfigError("'%s' does not hold a mapping" % path)
    base = os.path.dirname(os.path.abspath(path))
    for key in PATH_KEYS:
        if config.get(key) and not os.path.isabs(config[key]):
            config[key] = os.path.join(base, config[key])
    data = config.get('data') or {}
    if data.get('path') and not os.path.isabs(data['path']):
        data['path'] = os.path.join(base, data['path'])
    config['config_file'] = os.path.abspath(path)
    return config


def config_section(path, section, overrides=None):
    """ One section of a config file (empty without a file), with any
    non-None overrides from the command line applied on top. """
    values = {}
    if path:
        values = dict(load_config(path).get(section) or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return values


class Experiment(threading.Thread):

    """ Runs the configured pipeline stages in order over one run dir """
    log = logging.getLogger("experiment.Experiment")

    def __init__(self, config, setup_logging=True):
        super(Experiment, self).__init__()
        self._stop_event = threading.Event()
        self._graceful = threading.Event()
        self.config = config

        # Load extra configuration first
        # NOTE: debug_log might be specified in a conf.d snippet.
        if 'conf_d' in self.config:
            self.load_extra_configuration()

        # Python logging output file.
        self.debug_log = self.config.get('debug_log')
        if setup_logging:
            utils.setup_logging(self.debug_log)

        if not self.config.get('run_dir'):
            raise common.ConfigError('run_dir is not configured')
        self.run_dir = self.config['run_dir']
        utils.ensure_dir(self.run_dir)

        self.pool = worker_manager.WorkerPool(self.config.get('workers', 1))
        self.cache = {}
        self.plugins = []
        self.tasks = collections.OrderedDict()
        self.current_task = None
        self.error = None
        self.load_plugins()

    def load_extra_configuration(self):
        conf_d = self.config["conf_d"]
        if os.path.isdir(conf_d):
            extra_configs = (os.path.join(conf_d, item)
                             for item in sorted(os.listdir(conf_d))
                             if os.path.isfile(os.path.join(conf_d, item)))
            for conf in extra_configs:
                try:
                    with open(conf, 'r') as config_stream:
                        extra_config = yaml.safe_load(config_stream)
                        self.config.update(extra_config)
                except Exception:
                    self.log.warning("Failed to load extra configuration: "
                                     "'%s'" % conf)
                    continue
        else:
            self.log.warning("conf_d parameter '%s' isn't a directory"
                             % conf_d)

    def path(self, *parts):
        return os.path.join(self.run_dir, *parts)

    def load_plugins(self):
        """ Load the configured stages from task_plugins """
        self.log.debug('Loading plugins')
        pipeline = self.config.get('pipeline') or \
            [dict(name=name) for name in DEFAULT_PIPELINE]
        for plugin in pipeline:
            if isinstance(plugin, str):
                plugin = dict(name=plugin)
            try:
                module = __import__('dse_bench.task_plugins.' +
                                    plugin['name'] + '.task',
                                    fromlist='dse_bench.task_plugins' +
                                    plugin['name'])
            except ImportError:
                raise common.ConfigError("Unknown pipeline stage '%s'"
                                         % plugin['name'])
            self.plugins.append({
                'module': module,
                'plugin_config': plugin
            })
            self.log.debug('Plugin %s loaded' % plugin['name'])

        for plugin in self.plugins:
            runner = plugin['module'].Runner
            name = plugin['plugin_config']['name']
            section = self.config.get(runner.section) or {}
            self.tasks[name] = runner(self, dict(section), name)

    def run_pipeline(self):
        """ Run every stage; returns the path of the report. """
        for name, task in self.tasks.items():
            if self._graceful.is_set() or self.stopped():
                self.log.info('Stopping before stage %s' % name)
                break
            self.log.info('Running stage %s' % name)
            self.current_task = task
            task.start_job()
        self.current_task = None
        return self.path(common.REPORT)

    def shutdown_gracefully(self):
        """ Stop once the current stage completes """
        self.log.debug('Graceful shutdown once the stage is complete...')
        self._graceful.set()

    def shutdown(self):
        self.log.debug('Shutting down now!...')
        for task in self.tasks.values():
            task.stop_working()
        self.pool.stop()
        self._stop_event.set()

    def stopped(self):
        return self._stop_event.is_set()

    def run(self):
        try:
            self.run_pipeline()
        except Exception as e:
            self.error = e
        finally:
            self._stop_event.set()


def run_experiment(config_file, setup_logging=True):
    """ Run (or resume) the whole pipeline for a config file. """
    from dse_bench.task_plugins.evalharness import harness

    experiment = Experiment(load_config(config_file),
                            setup_logging=setup_logging)
    report_path = experiment.run_pipeline()
    if not os.path.exists(report_path):
        raise common.MissingArtifactError(
            report_path, 'the pipeline does not end with evalharness')
    return harness.EvaluationReport.load(report_path)
