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
from dse_bench.task_plugins.cvgae import generators
from dse_bench.task_plugins.explainers import explainers
from dse_bench.task_plugins.evalharness import handle_results
from dse_bench.task_plugins.evalharness import harness
from dse_bench.task_plugins.frontdoor import estimators
from dse_bench.task_plugins.predictor import model


ECHO_SECTIONS = ('data', 'predictor', 'generator', 'explainers', 'dse',
                 'sweep', 'evaluation')
DEFAULT_RATIOS = (0.05, 0.1, 0.15, 0.2, 0.3, 0.5)


class EvaluationConfig(object):

    def __init__(self, fid_random_masks=1, ratio=None,
                 ratio_curve=DEFAULT_RATIOS, generator_eval_graphs=None,
                 removal_graphs=None):
        self.fid_random_masks = int(fid_random_masks)
        self.ratio = None if ratio is None else float(ratio)
        self.ratio_curve = [float(r) for r in ratio_curve]
        self.generator_eval_graphs = generator_eval_graphs
        self.removal_graphs = None if removal_graphs is None \
            else int(removal_graphs)
        if self.fid_random_masks < 1:
            raise common.ConfigError('evaluation.fid_random_masks must be '
                                     '>= 1')
        if self.removal_graphs is not None and self.removal_graphs < 1:
            raise common.ConfigError('evaluation.removal_graphs must be '
                                     '>= 1')
        for r in self.ratio_curve + ([self.ratio] if self.ratio else []):
            if not 0.0 < r <= 1.0:
                raise common.ConfigError('evaluation ratios must be in '
                                         '(0, 1]')

    @classmethod
    def from_dict(cls, section):
        return common.config_from_dict(cls, section, 'evaluation')


class Runner(models.Task):

    """ Score explainers and generators and write the report. """

    log = logging.getLogger("task_plugins.evalharness.task.Runner")

    artifacts = (common.REPORT, common.EXPLAINER_TABLE,
                 common.GENERATOR_TABLE, common.CORRELATION_PLOT,
                 common.MANIFEST)
    section = 'evaluation'

    def __init__(self, experiment, plugin_config, stage_name):
        super(Runner, self).__init__(experiment, plugin_config, stage_name)
        self.report = None
        self.cfg = None
        self.dse_cfg = None
        self.predictor = None
        self.dataset = None
        self.masks = None
        self.records = None
        self.eval_graphs = []
        self.removal_graphs = []
        self.index = {}
        self.ratio = None

        # Define the number of steps we will do to determine our progress.
        self.total_steps = 6

    def do_job_steps(self):
        self.log.info('Step 1: Load evaluation inputs')
        self._load_inputs()
        self.log.info('Step 2: Score explainers')
        self._score_explainers()
        self.log.info('Step 3: Score generators')
        self._score_generators()
        self.log.info('Step 4: Removal table and ratio curve')
        self._tables()
        self.log.info('Step 5: Write report, tables and figure')
        self._write_results()
        self.log.info('Step 6: Manifest, index and publishing')
        self._handle_results()

    @common.task_step
    def _load_inputs(self):
        config = self.experiment.config
        self.cfg = EvaluationConfig.from_dict(self.plugin_config)
        self.dse_cfg = estimators.DseConfig.from_dict(config.get('dse'))
        self.predictor = model.Predictor.load(self.require(common.PREDICTOR))
        self.dataset = self.load_dataset()
        self.masks = explainers.read_masks(self.require(common.MASKS))
        self.records = estimators.read_records(self.require(common.RECORDS))
        with open(self.require(common.GENERATOR_INDEX)) as fd:
            self.index = json.load(fd)

        ids = sorted(set(graph_id for graph_id, _ in self.masks))
        lookup = dict((g.graph_id, g) for g in self.dataset)
        self.eval_graphs = [lookup[i] for i in ids]
        if self.cfg.generator_eval_graphs:
            self.eval_graphs = \
                self.eval_graphs[:int(self.cfg.generator_eval_graphs)]
        self.removal_graphs = explainers.select_evaluation_graphs(
            self.dataset, self.predictor, self.cfg.removal_graphs)
        self.ratio = self.cfg.ratio or float(
            (config.get('explainers') or {}).get('mask_ratio', 0.15))
        self.report = harness.EvaluationReport()

    @common.task_step
    def _score_explainers(self):
        summary = harness.explainer_summary(self.dataset, self.masks,
                                            self.records)
        rankings, spearman = harness.explainer_rankings(summary)
        self.report.explainers = summary
        self.report.rankings = rankings
        self.report.spearman = spearman

    def _load_generator(self, name, entry):
        return generators.load_generator(self.require(entry['path']),
                                         name=name)

    @common.task_step
    def _score_generators(self):
        results = {}
        for name in sorted(self.index):
            if self.cancelled:
                raise models.StageCancelled('Stage %s cancelled'
                                            % self.stage_name)
            self.log.debug('Scoring generator %s' % name)
            results[name] = harness.generator_metrics(
                self.eval_graphs, self._load_generator(name, self.index[name]),
                self.predictor, self.dse_cfg, self.cfg.fid_random_masks,
                self.ratio, pool=self.experiment.pool)

        def by_role(role):
            return sorted(n for n, e in self.index.items()
                          if e['role'] == role)

        self.report.generators = dict(
            (n, results[n]) for n in by_role('main') + by_role('baseline'))
        ablations = by_role('ablation')
        seeds = sorted(set(self.index[n]['seed'] for n in ablations))
        ablation_results = dict((n, results[n]) for n in ablations)
        self.report.ablation = harness.ablation_summary(ablation_results,
                                                        seeds)
        self.report.sweep = [
            dict(results[n], **{'lambda': self.index[n]['lambda'],
                                'gamma': self.index[n]['gamma']})
            for n in by_role('sweep')]
        self.report.sweep.sort(key=lambda r: (r['lambda'], r['gamma']))

    @common.task_step
    def _tables(self):
        self.report.removal_gap = harness.removal_table(
            self.removal_graphs, self.predictor, self.dse_cfg,
            pool=self.experiment.pool)
        main = sorted(n for n, e in self.index.items()
                      if e['role'] == 'main')
        if main and self.cfg.ratio_curve:
            self.report.ratio_curve = harness.ratio_curve(
                self.eval_graphs,
                self._load_generator(main[0], self.index[main[0]]),
                self.predictor, self.dse_cfg, self.cfg.ratio_curve,
                pool=self.experiment.pool)

    def _echo(self):
        config = self.experiment.config
        return dict((s, config[s]) for s in ECHO_SECTIONS
                    if config.get(s) is not None)

    @common.task_step
    def _write_results(self):
        config = self.experiment.config
        metrics = dict(self.predictor.metrics)
        metrics.pop('test_ids', None)
        self.report.predictor = metrics
        self.report.config = self._echo()
        self.report.seeds = dict(
            (s, (config.get(s) or {}).get('seed'))
            for s in ('data', 'predictor', 'generator', 'explainers', 'dse'))
        self.report.metadata = dict(
            correlation='pearson',
            ranking_aggregate='mean',
            removal_isolated_nodes='kept',
            discriminator_condition='one-hot label',
            target=self.dse_cfg.target,
            estimator=self.dse_cfg.estimator,
            pool_conditioning=self.dse_cfg.pool_conditioning,
            evaluation_graphs=len(self.eval_graphs),
            evaluation_ratio=self.ratio)
        handle_results.write_results(self.report, self.experiment.run_dir)

    @common.task_step
    def _handle_results(self):
        inputs = dict(config=self.experiment.config.get('config_file'),
                      dataset=self.path(common.DATASET),
                      predictor=self.path(common.PREDICTOR),
                      generator=self.path(common.GENERATOR),
                      masks=self.path(common.MASKS),
                      records=self.path(common.RECORDS))
        handle_results.write_manifest(self.experiment.run_dir, inputs,
                                      self.path(common.MANIFEST))
        handle_results.make_index_file(self.experiment.run_dir)
        publish = self.experiment.config.get('publish_results')
        if publish:
            url = handle_results.generate_push_results(
                self.experiment.run_dir,
                os.path.basename(os.path.normpath(self.experiment.run_dir)),
                publish)
            self.log.debug("Results published to %s" % url)
            self._get_work_data()['url'] = url
