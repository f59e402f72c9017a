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
from dse_bench.lib import models
from dse_bench.lib import utils
from dse_bench.task_plugins.cvgae import generators
from dse_bench.task_plugins.cvgae import model
from dse_bench.task_plugins.cvgae import train


def _number(value):
    return ('%g' % value).replace('.', 'p')


def plan_generators(cfg, baselines=('random',), trained_baselines=('vgae',),
                    ablation_seeds=(), sweep=None):
    """ Every generator a run trains or fits, main one first.

    Entries carry a name, a role (main, baseline, ablation or sweep), the
    checkpoint path relative to the run dir and, for trained ones, the
    GeneratorConfig. """
    plan = [dict(name='cvgae', role='main', config=cfg,
                 path=common.GENERATOR, losses=common.LOSSES)]

    def add(name, role, config=None, **extra):
        entry = dict(name=name, role=role, config=config,
                     path=os.path.join(common.GENERATOR_DIR, name + '.npz'))
        if config is not None:
            entry['losses'] = os.path.join(common.GENERATOR_DIR,
                                           name + '-losses.csv')
        entry.update(extra)
        plan.append(entry)

    for name in baselines:
        if name not in generators.BASELINES:
            raise common.ConfigError("Unknown baseline generator '%s'" % name)
        add(name, 'baseline')
    for name in trained_baselines:
        if name != 'vgae':
            raise common.ConfigError("Unknown trained baseline '%s'" % name)
        add(name, 'baseline', cfg.replace(variant='vgae',
                                          contrastive_weight=0.0,
                                          adversarial_weight=0.0))
    for seed in ablation_seeds:
        seed = int(seed)
        add('cvgae-s%d' % seed, 'ablation', cfg.replace(seed=seed),
            variant='cvgae', seed=seed)
        add('no_contrastive-s%d' % seed, 'ablation',
            cfg.replace(seed=seed, contrastive_weight=0.0),
            variant='no_contrastive', seed=seed)
        add('no_penalty-s%d' % seed, 'ablation',
            cfg.replace(seed=seed, penalty_weight=0.0),
            variant='no_penalty', seed=seed)
    sweep = sweep or {}
    for lam in sweep.get('lambda', []):
        for gamma in sweep.get('gamma', []):
            add('sweep-l%s-g%s' % (_number(lam), _number(gamma)), 'sweep',
                cfg.replace(penalty_weight=lam, contrastive_weight=gamma),
                **{'lambda': float(lam), 'gamma': float(gamma)})
    return plan


def plan_index(plan):
    """ JSON-able view of a plan, as written to generators/index.json. """
    index = {}
    for entry in plan:
        item = dict((k, v) for k, v in entry.items() if k != 'config')
        if entry.get('config') is not None:
            item['config'] = entry['config'].to_dict()
        index[entry['name']] = item
    return index


class Runner(models.Task):

    """ Train the surrogate generator, its baselines and ablations. """

    log = logging.getLogger("task_plugins.cvgae.task.Runner")

    artifacts = (common.GENERATOR, common.DISCRIMINATOR, common.LOSSES,
                 common.GENERATOR_INDEX)
    section = 'generator'

    def __init__(self, experiment, plugin_config, stage_name):
        super(Runner, self).__init__(experiment, plugin_config, stage_name)
        self.plan = None

        # Define the number of steps we will do to determine our progress.
        self.total_steps = 3

    def _build_plan(self):
        section = dict(self.plugin_config)
        baselines = section.pop('baselines', ['random'])
        trained = section.pop('trained_baselines', ['vgae'])
        seeds = section.pop('ablation_seeds', [])
        cfg = model.GeneratorConfig.from_dict(section)
        return plan_generators(cfg, baselines, trained, seeds,
                               self.experiment.config.get('sweep'))

    def is_complete(self):
        if not super(Runner, self).is_complete():
            return False
        return all(os.path.exists(self.path(entry['path']))
                   for entry in self._build_plan())

    def do_job_steps(self):
        self.log.info('Step 1: Plan generators')
        self._plan()
        self.log.info('Step 2: Train and fit generators')
        self._train_all()
        self.log.info('Step 3: Write generator index')
        self._write_index()

    @common.task_step
    def _plan(self):
        self.plan = self._build_plan()
        utils.ensure_dir(self.path(common.GENERATOR_DIR))

    @common.task_step
    def _train_all(self):
        dataset = self.load_dataset()
        for entry in self.plan:
            if self.cancelled:
                raise models.StageCancelled('Stage %s cancelled'
                                            % self.stage_name)
            path = self.path(entry['path'])
            if os.path.exists(path):
                self.log.debug('Generator %s already present' % entry['name'])
                continue
            if entry['config'] is None:
                generators.baseline(entry['name'], dataset).to_checkpoint(
                    metrics={'role': entry['role']}).save(path)
                continue
            self.log.debug('Training generator %s' % entry['name'])
            result = train.train_generator(dataset, entry['config'])
            train.write_losses(result.losses, self.path(entry['losses']))
            if entry['role'] == 'main':
                result.discriminator.save(self.path(common.DISCRIMINATOR))
            result.generator.save(path)

    @common.task_step
    def _write_index(self):
        with open(self.path(common.GENERATOR_INDEX), 'w') as fd:
            json.dump(plan_index(self.plan), fd, indent=2, sort_keys=True)
            fd.write('\n')
        self._get_work_data()['generators'] = [e['name'] for e in self.plan]
