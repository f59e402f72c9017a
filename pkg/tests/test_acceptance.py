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

from dse_bench import experiment
from dse_bench.task_plugins.evalharness import harness


ACCEPTANCE = os.environ.get('DSE_BENCH_ACCEPTANCE') == '1'
CONFIG = os.path.join(os.path.dirname(__file__), os.pardir, 'etc',
                      'dse-bench', 'config.yaml')


@testtools.skipUnless(ACCEPTANCE, 'set DSE_BENCH_ACCEPTANCE=1 for the full '
                      'TR3 benchmark run')
class TestBenchmark(testtools.TestCase):
    """ The full-size run; slow, so only run on request. """

    @classmethod
    def setUpClass(cls):
        super(TestBenchmark, cls).setUpClass()
        if not ACCEPTANCE:
            return
        cls.tempdir = fixtures.TempDir()
        cls.tempdir.setUp()
        config = experiment.load_config(CONFIG)
        config['run_dir'] = os.path.join(cls.tempdir.path, 'run')
        config['debug_log'] = os.path.join(cls.tempdir.path, 'debug.log')
        config.pop('conf_d', None)
        config.pop('publish_results', None)
        run = experiment.Experiment(config, setup_logging=False)
        cls.report = harness.EvaluationReport.load(run.run_pipeline())

    @classmethod
    def tearDownClass(cls):
        if ACCEPTANCE:
            cls.tempdir.cleanUp()
        super(TestBenchmark, cls).tearDownClass()

    def test_predictor_accuracy(self):
        self.assertGreaterEqual(self.report.predictor['test_accuracy'], 0.90)

    def test_removal_is_out_of_distribution(self):
        table = self.report.removal_gap
        self.assertGreaterEqual(table['graphs'], 500)
        self.assertLessEqual(table['ground_truth_removal'],
                             table['full_graph'] - 0.30)

    def test_generator_beats_random(self):
        random = self.report.generators['random']
        runs = [self.report.generators['cvgae']] + [
            run for run in self.report.ablation['runs']
            if run['variant'] == 'cvgae']
        self.assertGreaterEqual(len(runs), 4)
        for run in runs:
            self.assertGreater(run['VAL'], 0.0)
            self.assertGreater(run['VAL'], random['VAL'])
            self.assertLess(run['FID'], random['FID'])

    def test_gradient_explainers_beat_random(self):
        random = self.report.explainers['random']['mean_precision']
        for kind in ('sa', 'gradcam'):
            self.assertGreaterEqual(
                self.report.explainers[kind]['mean_precision'], random)

    def test_surrogates_deconfound_explainers(self):
        better = [kind for kind, entry in self.report.explainers.items()
                  if entry['rho_dse'] is not None and
                  (entry['rho_re'] is None or
                   entry['rho_dse'] > entry['rho_re'])]
        self.assertGreaterEqual(len(better), 4)
        spearman = self.report.spearman
        self.assertGreater(spearman['spearman_dse'],
                           spearman['spearman_re'] or -1.0)

    def test_ablations(self):
        self.assertEqual(3, self.report.ablation['cvgae']['seeds'])
        self.assertTrue(
            self.report.ablation['cvgae_dominates_no_contrastive'])
        self.assertTrue(self.report.ablation['cvgae_dominates_no_penalty'])

    def test_sweep_grid(self):
        self.assertEqual(16, len(self.report.sweep))
