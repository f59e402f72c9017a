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


import itertools
import os

import fixtures
import numpy as np
import testtools

from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.task_plugins.cvgae import generators
from dse_bench.task_plugins.explainers import explainers
from dse_bench.task_plugins.frontdoor import estimators
from dse_bench.task_plugins.frontdoor import task
from dse_bench import worker_manager
from tests import fakes


def exhaustive(predictor, g, mask, p, target):
    """ Sum over every completion of the mask's free pairs. """
    free = [pair for pair in itertools.combinations(range(g.node_count), 2)
            if pair not in mask.selected]
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(free)):
        edges = set(mask.selected)
        edges.update(pair for pair, bit in zip(free, bits) if bit)
        weight = np.prod([p if bit else 1.0 - p for bit in bits])
        star = graphs.Graph(g.graph_id, g.node_count, edges, g.node_features,
                            g.label)
        total += weight * predictor.forward(star)[target]
    return total


class TestConfig(testtools.TestCase):
    def test_validation(self):
        self.assertRaises(common.ConfigError, estimators.DseConfig,
                          num_surrogates=0)
        self.assertRaises(common.ConfigError, estimators.DseConfig,
                          estimator='exact')
        self.assertRaises(common.ConfigError, estimators.DseConfig,
                          pool_conditioning='joint')
        self.assertRaises(common.ConfigError, estimators.DseConfig,
                          target='oracle')
        self.assertRaises(common.ConfigError, estimators.DseConfig.from_dict,
                          {'n': 5})

    def test_replace(self):
        cfg = estimators.DseConfig(seed=3)
        self.assertEqual('weighted',
                         cfg.replace(estimator='weighted').estimator)
        self.assertEqual(3, cfg.replace(num_surrogates=2).seed)


class TestEstimators(testtools.TestCase):
    def setUp(self):
        super(TestEstimators, self).setUp()
        self.predictor = fakes.toy_predictor()
        self.g = fakes.triangle()
        self.mask = graphs.mask_from_edges(self.g, [(0, 1)])
        self.generator = generators.FixedProbabilityGenerator(0.3)

    def test_exact_reduced_matches_enumeration(self):
        cfg = estimators.DseConfig(exact_max_free_pairs=3)
        value = estimators.imp_dse_reduced(self.predictor, self.generator,
                                           self.g, self.mask, 2, cfg)
        expected = exhaustive(self.predictor, self.g, self.mask, 0.3, 2)
        self.assertLess(abs(expected - value), 1e-6)

    def test_exact_weighted_matches_enumeration(self):
        cfg = estimators.DseConfig(exact_max_free_pairs=3,
                                   estimator='weighted',
                                   adjustment_pool_size=4)
        value = estimators.imp_dse_weighted(self.predictor, self.generator,
                                            self.g, self.mask, 2, cfg)
        expected = exhaustive(self.predictor, self.g, self.mask, 0.3, 2)
        self.assertLess(abs(expected - value), 1e-6)

    def test_sampled_reduced_approaches_enumeration(self):
        cfg = estimators.DseConfig(num_surrogates=2000)
        value = estimators.imp_dse_reduced(self.predictor, self.generator,
                                           self.g, self.mask, 2, cfg)
        expected = exhaustive(self.predictor, self.g, self.mask, 0.3, 2)
        self.assertLess(abs(expected - value), 0.01)

    def test_variance_shrinks_with_samples(self):
        g = fakes.make_graph('g', 5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        mask = graphs.mask_from_edges(g, [(1, 2)])
        generator = generators.FixedProbabilityGenerator(0.5)

        def spread(n):
            values = [estimators.imp_dse_reduced(
                self.predictor, generator, g, mask, 0,
                estimators.DseConfig(num_surrogates=n, seed=seed))
                for seed in range(60)]
            return np.var(values)

        self.assertLessEqual(spread(400), spread(25) / 8.0)

    def test_weighted_single_member_pool_is_reduced(self):
        cfg = estimators.DseConfig(num_surrogates=20, seed=9)
        reduced = estimators.imp_dse(self.predictor, self.generator, self.g,
                                     self.mask, 1, cfg)[0]
        weighted = estimators.imp_dse(
            self.predictor, self.generator, self.g, self.mask, 1,
            cfg.replace(estimator='weighted', adjustment_pool_size=1))[0]
        self.assertEqual(reduced, weighted)

    def test_full_graph_generator(self):
        cfg = estimators.DseConfig(num_surrogates=5)
        full = generators.FullGraphGenerator()
        value = estimators.imp_dse_reduced(self.predictor, full, self.g,
                                           self.mask, 0, cfg)
        self.assertAlmostEqual(self.predictor.forward(self.g)[0], value)
        self.assertAlmostEqual(0.0, estimators.imp_dse_deletion(
            self.predictor, full, self.g, self.mask, 0, cfg))
        union = estimators.imp_dse_weighted(
            self.predictor, full, self.g, self.mask, 0,
            cfg.replace(estimator='weighted', pool_conditioning='union'))
        self.assertAlmostEqual(self.predictor.forward(self.g)[0], union)

    def test_deletion_of_empty_mask(self):
        g = fakes.path('p', 4)
        empty = graphs.mask_from_edges(g, [])
        cfg = estimators.DseConfig(num_surrogates=50, seed=4)
        # 3 free pairs at p=0.02: a surrogate differs from g with
        # probability below 0.06.
        value = estimators.imp_dse_deletion(
            self.predictor, generators.FixedProbabilityGenerator(0.02), g,
            empty, 0, cfg)
        self.assertLessEqual(abs(value), 0.1)
        self.assertAlmostEqual(0.0, estimators.imp_dse_deletion(
            self.predictor, generators.IdentityGenerator(), g, empty, 0,
            cfg))

    def test_deletion_range(self):
        g = fakes.path('p', 4)
        cfg = estimators.DseConfig(num_surrogates=10, seed=2)
        generator = generators.FixedProbabilityGenerator(0.5)
        for k in range(len(g.edges) + 1):
            for edges in itertools.combinations(g.edges, k):
                mask = graphs.mask_from_edges(g, edges)
                for target in range(3):
                    value = estimators.imp_dse_deletion(
                        self.predictor, generator, g, mask, target, cfg)
                    self.assertTrue(-1.0 <= value <= 1.0)

    def test_identity_generator_is_removal(self):
        cfg = estimators.DseConfig(num_surrogates=3)
        value = estimators.imp_dse_reduced(
            self.predictor, generators.IdentityGenerator(), self.g,
            self.mask, 1, cfg)
        self.assertAlmostEqual(
            self.predictor.importance_removal(self.mask, self.g, 1), value)

    def test_posterior_weights(self):
        weights = estimators.posterior_weights([np.log(0.5), np.log(0.25)])
        self.assertTrue(np.allclose([1 / 3.0, 2 / 3.0], weights))
        weights = estimators.posterior_weights([np.log(0.5), -np.inf])
        self.assertEqual([1.0, 0.0], weights.tolist())
        self.assertRaises(estimators.DegenerateWeightsError,
                          estimators.posterior_weights, [-np.inf, -np.inf])

    def test_adjustment_pool(self):
        pool = estimators.adjustment_pool(self.g, 2, 5,
                                          np.random.default_rng(0))
        self.assertEqual(5, len(pool))
        for member in pool:
            self.assertEqual(2, len(member))
            self.assertTrue(member <= self.g.edge_set)

    def test_mask_of_other_graph(self):
        cfg = estimators.DseConfig(num_surrogates=2)
        self.assertRaises(graphs.IdentityError, estimators.imp_dse,
                          self.predictor, self.generator,
                          fakes.triangle('other'), self.mask, 0, cfg)


class TestEvaluateAll(testtools.TestCase):
    def setUp(self):
        super(TestEvaluateAll, self).setUp()
        self.predictor = fakes.toy_predictor()
        self.dataset = fakes.toy_dataset()
        self.masks = explainers.explain_dataset(
            self.predictor, self.dataset[:4], ['sa', 'random'],
            explainers.ExplainerConfig(mask_ratio=0.5))
        self.generator = generators.FixedProbabilityGenerator(0.3)
        self.cfg = estimators.DseConfig(num_surrogates=6)

    def test_records(self):
        records = estimators.evaluate_all(self.dataset, self.masks,
                                          self.predictor, self.generator,
                                          self.cfg)
        self.assertEqual(sorted(self.masks), [r.key for r in records])
        for r in records:
            self.assertEqual(6, len(r.surrogate_probs))
            self.assertTrue(0.0 <= r.imp_dse <= 1.0)
            self.assertEqual('reduced', r.estimator)

    def test_pool_matches_serial(self):
        serial = estimators.evaluate_all(self.dataset, self.masks,
                                         self.predictor, self.generator,
                                         self.cfg)
        threaded = estimators.evaluate_all(
            self.dataset, self.masks, self.predictor, self.generator,
            self.cfg, pool=worker_manager.WorkerPool(4))
        self.assertEqual(serial, threaded)

    def test_unknown_graph(self):
        self.assertRaises(graphs.IdentityError, estimators.evaluate_all,
                          self.dataset[4:], self.masks, self.predictor,
                          self.generator, self.cfg)

    def test_records_file(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        path = os.path.join(tempdir, 'records.jsonl')
        records = estimators.evaluate_all(self.dataset, self.masks,
                                          self.predictor, self.generator,
                                          self.cfg)
        estimators.write_records(reversed(records), path)
        self.assertEqual(records, estimators.read_records(path))


class TestRunner(testtools.TestCase):
    def test_stage_writes_records(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        experiment = fakes.FakeExperiment(tempdir)
        os.makedirs(experiment.path('data'))
        dataset = fakes.toy_dataset()
        graphs.write_dataset(dataset, experiment.path(common.DATASET))
        predictor = fakes.toy_predictor()
        predictor.save(experiment.path(common.PREDICTOR))
        generators.RandomGenerator(0.2).to_checkpoint().save(
            experiment.path(common.GENERATOR))
        masks = explainers.explain_dataset(predictor, dataset[:2], ['sa'],
                                           explainers.ExplainerConfig())
        explainers.write_masks(masks, experiment.path(common.MASKS))

        runner = task.Runner(experiment, {'num_surrogates': 3}, 'frontdoor')
        runner.start_job()
        records = estimators.read_records(experiment.path(common.RECORDS))
        self.assertEqual([('toy-0-0', 'sa'), ('toy-0-1', 'sa')],
                         [r.key for r in records])
