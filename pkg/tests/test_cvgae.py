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


import math
import os

import fixtures
import numpy as np
import testtools
import torch

from dse_bench.lib import batching
from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.task_plugins.cvgae import generators
from dse_bench.task_plugins.cvgae import losses
from dse_bench.task_plugins.cvgae import model
from dse_bench.task_plugins.cvgae import task
from dse_bench.task_plugins.cvgae import train
from tests import fakes


def tiny_config(**kwargs):
    fields = dict(encode_dim=4, hidden_dim=8, num_layers=2, decoder_hidden=8,
                  discriminator_hidden=8, batch_size=9, max_epochs=2, seed=1)
    fields.update(kwargs)
    return model.GeneratorConfig(**fields)


class SumCritic(torch.nn.Module):
    """ Scores a graph as twice the sum of its pair weights """

    def forward(self, batch, pair_weight):
        return torch.zeros(batch.num_graphs, dtype=pair_weight.dtype) \
            .index_add(0, batch.edge_graph(), 2.0 * pair_weight)


class TestLosses(testtools.TestCase):
    def test_kl_zero_at_prior(self):
        mu = torch.zeros(4, 3)
        self.assertEqual(0.0, float(losses.kl_per_node(mu, mu).abs().max()))

    def test_kl_matches_monte_carlo(self):
        gen = torch.Generator().manual_seed(0)
        mu = torch.tensor([[0.5, -1.0, 0.2]], dtype=torch.float64)
        log_sigma = torch.tensor([[-0.3, 0.4, 0.1]], dtype=torch.float64)
        closed = float(losses.kl_per_node(mu, log_sigma)[0])
        sigma = torch.exp(log_sigma)
        eps = torch.randn((200000, 3), generator=gen, dtype=torch.float64)
        z = mu + sigma * eps
        q = torch.distributions.Normal(mu, sigma).log_prob(z).sum(-1)
        p = torch.distributions.Normal(0.0, 1.0).log_prob(z).sum(-1)
        estimate = float((q - p).mean())
        self.assertLess(abs(estimate - closed) / closed, 0.02)

    def test_kl_divergence_means_per_graph(self):
        mu = torch.tensor([[1.0], [0.0], [2.0]], dtype=torch.float64)
        ls = torch.zeros_like(mu)
        node_graph = torch.tensor([0, 0, 1])
        # per node 0.5 * mu^2: graph 0 -> 0.25, graph 1 -> 2.0
        self.assertAlmostEqual(1.125, float(losses.kl_divergence(
            mu, ls, node_graph, 2)))

    def test_reconstruction_only_free_pairs(self):
        logits = torch.tensor([0.0, 2.0, -1.0, 3.0], dtype=torch.float64)
        targets = torch.tensor([1.0, 0.0, 0.0, 1.0], dtype=torch.float64)
        free = torch.tensor([True, True, False, False])
        pair_graph = torch.tensor([0, 0, 1, 1])
        expected = (math.log(2.0) + math.log(1.0 + math.exp(2.0))) / 2.0 / 2
        self.assertAlmostEqual(expected, float(losses.reconstruction_loss(
            logits, targets, free, pair_graph, 2)))

    def test_contrastive_known_value(self):
        emb = torch.tensor([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
                           dtype=torch.float64)
        labels = torch.tensor([0, 0, 1])
        value = float(losses.loss_contrastive(emb, labels, 0.5))
        self.assertAlmostEqual(math.log(1.0 + math.exp(-4.0)), value)
        value = float(losses.loss_contrastive(emb, labels, 0.5,
                                              similarity='cosine'))
        self.assertAlmostEqual(math.log(1.0 + math.exp(-2.0)), value)

    def test_contrastive_rewards_aligned_classes(self):
        labels = torch.tensor([0, 0, 1, 1])
        aligned = torch.tensor([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                                [0.0, 1.0]], dtype=torch.float64)
        mixed = torch.tensor([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0],
                              [0.0, 1.0]], dtype=torch.float64)
        self.assertLess(float(losses.loss_contrastive(aligned, labels, 0.1)),
                        float(losses.loss_contrastive(mixed, labels, 0.1)))

    def test_contrastive_sharpens_with_temperature(self):
        emb = torch.tensor([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0],
                            [0.0, 1.0]], dtype=torch.float64)
        labels = torch.tensor([0, 0, 1, 1])
        values = [float(losses.loss_contrastive(emb, labels, tau))
                  for tau in (1.0, 0.5, 0.1)]
        self.assertGreater(values[0], values[1])
        self.assertGreater(values[1], values[2])

    def test_contrastive_without_positives(self):
        emb = torch.randn(3, 4)
        value = losses.loss_contrastive(emb, torch.tensor([0, 1, 2]), 0.1)
        self.assertEqual(0.0, float(value))

    def test_gradient_penalty_of_linear_critic(self):
        dataset = [fakes.triangle(), fakes.path('p', 4)]
        batch = batching.GraphBatch.complete(dataset, dtype=torch.float64)
        real = torch.ones(batch.num_edges, dtype=torch.float64)
        fake = torch.zeros(batch.num_edges, dtype=torch.float64)
        penalty = losses.gradient_penalty(SumCritic(), batch, real, fake)
        expected = [(2.0 * math.sqrt(3) - 1.0) ** 2,
                    (2.0 * math.sqrt(6) - 1.0) ** 2]
        self.assertTrue(np.allclose(expected, penalty.detach().numpy()))

    def test_loss_discriminator(self):
        real = torch.tensor([2.0, 1.0])
        fake = torch.tensor([0.5, 0.5])
        self.assertAlmostEqual(1.0, float(losses.loss_discriminator(real,
                                                                    fake)))
        penalty = torch.tensor([1.0, 0.0])
        self.assertAlmostEqual(0.5, float(losses.loss_discriminator(
            real, fake, penalty, penalty_weight=1.0)))


class TestModel(testtools.TestCase):
    def setUp(self):
        super(TestModel, self).setUp()
        torch.manual_seed(0)
        self.cfg = tiny_config()
        self.module = model.CVGAE(2, self.cfg)

    def test_reparameterize(self):
        mu = torch.randn(3, 2)
        self.assertTrue(torch.equal(mu, model.reparameterize(
            mu, torch.zeros(3, 2), torch.zeros(3, 2))))

    def test_encode_and_decode(self):
        g = fakes.path('p', 4)
        g_s = g.replace(edges=[(0, 1)], ground_truth_edges=None)
        code = model.encode(self.module, g, g_s)
        self.assertEqual((4, 8), tuple(code.mu.shape))
        self.assertEqual(4, code.node_count)
        self.assertEqual(8, code.dim)
        probs = model.decode(self.module, code, 4)
        self.assertEqual(6, len(probs.as_dict()))
        for (u, v), p in probs.as_dict().items():
            self.assertEqual(p, probs.get(v, u))
            self.assertTrue(model.PROB_EPS <= p <= 1.0 - model.PROB_EPS)

    def test_encode_needs_shared_nodes(self):
        g = fakes.path('p', 4)
        self.assertRaises(graphs.IdentityError, model.encode, self.module, g,
                          fakes.path('p', 3))
        self.assertRaises(graphs.IdentityError, model.encode, self.module, g,
                          fakes.path('q', 4))

    def test_unconditional_variant_ignores_full_graph(self):
        module = model.CVGAE(2, tiny_config(variant='vgae'))
        g = fakes.path('p', 4)
        code = model.encode(module, g, g.replace(edges=[(0, 1)],
                                                 ground_truth_edges=None))
        self.assertTrue(torch.equal(code.mu[:, :4], code.mu[:, 4:]))

    def test_log_sigma_is_clamped(self):
        g = fakes.triangle()
        with torch.no_grad():
            for p in self.module.encoder.sigma_head.parameters():
                p.fill_(100.0)
        code = model.encode(self.module, g, g)
        self.assertLessEqual(float(code.log_sigma.max()),
                             model.MAX_LOG_SIGMA)

    def test_reparameterization_gradient(self):
        torch.manual_seed(2)
        decoder = model.PairDecoder(4, 8).to(torch.float64)
        log_sigma = torch.full((4, 4), -0.5, dtype=torch.float64)
        eps = torch.randn(4, 4, dtype=torch.float64)
        pairs = batching.all_pairs(4)
        u = torch.tensor([p[0] for p in pairs])
        v = torch.tensor([p[1] for p in pairs])
        targets = torch.tensor([1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
                               dtype=torch.float64)
        free = torch.ones(6, dtype=torch.bool)
        node_graph = torch.zeros(4, dtype=torch.long)
        pair_graph = torch.zeros(6, dtype=torch.long)

        def objective(mu):
            z = model.reparameterize(mu, log_sigma, eps)
            recon = losses.reconstruction_loss(decoder(z, u, v), targets,
                                               free, pair_graph, 1)
            kl = losses.kl_divergence(mu, log_sigma, node_graph, 1)
            return losses.loss_vae(recon, kl, 0.1)

        mu = torch.randn(4, 4, dtype=torch.float64, requires_grad=True)
        analytic, = torch.autograd.grad(objective(mu), mu)
        step = 1e-6
        numeric = torch.zeros_like(mu)
        with torch.no_grad():
            for i in range(4):
                for j in range(4):
                    plus = mu.detach().clone()
                    minus = mu.detach().clone()
                    plus[i, j] += step
                    minus[i, j] -= step
                    numeric[i, j] = (objective(plus) - objective(minus)) / \
                        (2 * step)
        scale = max(float(numeric.abs().max()), 1e-8)
        self.assertLess(float((analytic - numeric).abs().max()) / scale,
                        1e-3)

    def test_discriminator_condition(self):
        disc = model.Discriminator(2, 3, 8, 2)
        g = fakes.triangle(label=2)
        batch = disc.condition([g])
        self.assertEqual((3, 5), tuple(batch.x.shape))
        self.assertEqual([0.0, 0.0, 1.0], batch.x[0, 2:].tolist())
        self.assertEqual(3, batch.num_edges)
        score = disc(batch, torch.ones(3))
        self.assertEqual((1,), tuple(score.shape))

    def test_config_validation(self):
        self.assertRaises(common.ConfigError, tiny_config, variant='gan')
        self.assertRaises(common.ConfigError, tiny_config, masking_ratio=1.0)
        self.assertRaises(common.ConfigError, tiny_config,
                          contrastive_weight=-1)
        self.assertRaises(common.ConfigError, tiny_config,
                          similarity='euclidean')
        self.assertEqual(0.0, tiny_config(contrastive_weight=0)
                         .contrastive_weight)
        self.assertEqual('dot', tiny_config().similarity)


class TestGenerators(testtools.TestCase):
    def setUp(self):
        super(TestGenerators, self).setUp()
        self.g = fakes.make_graph('g', 5, [(0, 1), (1, 2), (2, 3), (3, 4)])
        self.mask = graphs.mask_from_edges(self.g, [(1, 2), (2, 3)])

    def rngs(self, count):
        return [np.random.default_rng(k) for k in range(count)]

    def test_forced_inclusion(self):
        torch.manual_seed(0)
        trained = generators.CvgaeGenerator(model.CVGAE(2, tiny_config()),
                                            tiny_config())
        for generator in (generators.RandomGenerator(0.3), trained):
            samples = generator.sample_surrogates(self.g, self.mask,
                                                  self.rngs(100))
            self.assertEqual(100, len(samples))
            for s in samples:
                self.assertTrue(s.contains_subgraph)
                self.assertTrue(self.mask.selected <= s.edges)
                self.assertLessEqual(s.log_likelihood, 0.0)

    def test_identity_and_full_graph(self):
        identity = generators.IdentityGenerator()
        for s in identity.sample_surrogates(self.g, self.mask,
                                            self.rngs(5)):
            self.assertEqual(self.mask.selected, s.edges)
            self.assertEqual(0.0, s.log_likelihood)
        full = generators.FullGraphGenerator()
        for s in full.sample_surrogates(self.g, self.mask, self.rngs(5)):
            self.assertEqual(self.g.edge_set, s.edges)

    def test_enumerate(self):
        g = fakes.path('p', 3)
        mask = graphs.mask_from_edges(g, [(0, 1)])
        out = generators.RandomGenerator(0.25).enumerate_surrogates(g, mask)
        self.assertEqual(4, len(out))
        self.assertAlmostEqual(1.0, sum(p for _, p in out))
        by_edges = dict((s.edges, p) for s, p in out)
        self.assertAlmostEqual(0.0625, by_edges[frozenset(g.edges) |
                                                frozenset([(0, 2)])])
        self.assertRaises(graphs.GraphError,
                          generators.RandomGenerator(0.5)
                          .enumerate_surrogates, self.g, self.mask, 4)

    def test_full_graph_enumerates_parent(self):
        out = generators.FullGraphGenerator().enumerate_surrogates(
            self.g, self.mask)
        self.assertEqual(1, len(out))
        self.assertEqual(self.g.edge_set, out[0][0].edges)
        self.assertEqual(1.0, out[0][1])

    def test_sampling_is_seeded(self):
        generator = generators.RandomGenerator(0.5)
        first = generator.sample_surrogate(self.g, self.mask,
                                           np.random.default_rng(3))
        second = generator.sample_surrogate(self.g, self.mask,
                                            np.random.default_rng(3))
        self.assertEqual(first.edges, second.edges)

    def test_fit_density(self):
        generator = generators.RandomGenerator.fit(
            [fakes.triangle(), fakes.path('p', 3)])
        self.assertAlmostEqual(5 / 6.0, generator.probability)

    def test_baselines(self):
        self.assertEqual('identity', generators.baseline('identity').name)
        self.assertEqual('full_graph',
                         generators.baseline('full_graph').name)
        self.assertRaises(generators.UnknownGeneratorError,
                          generators.baseline, 'oracle')

    def test_checkpoints(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        for generator in (generators.RandomGenerator(0.2),
                          generators.IdentityGenerator(),
                          generators.FullGraphGenerator()):
            path = os.path.join(tempdir, generator.name + '.npz')
            generator.to_checkpoint().save(path)
            loaded = generators.load_generator(path)
            self.assertEqual(type(generator), type(loaded))

        torch.manual_seed(0)
        cfg = tiny_config()
        trained = generators.CvgaeGenerator(model.CVGAE(2, cfg), cfg)
        path = os.path.join(tempdir, 'cvgae.npz')
        trained.to_checkpoint().save(path)
        loaded = generators.load_generator(path, name='main')
        self.assertEqual('main', loaded.name)
        conditioning = frozenset(self.mask.selected)
        self.assertTrue(np.allclose(
            trained.pair_probs(self.g, conditioning, None),
            loaded.pair_probs(self.g, conditioning, None)))


class TestTraining(testtools.TestCase):
    def test_break_graph(self):
        g = fakes.path('p', 11)
        rng = np.random.default_rng(0)
        kept = train.break_graph(g, 0.3, rng)
        self.assertEqual(7, len(kept))
        self.assertTrue(set(kept) <= g.edge_set)
        self.assertEqual(list(g.edges), train.break_graph(g, 0.04, rng))

    def test_train_writes_losses(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        result = train.train_generator(fakes.toy_dataset(), tiny_config())
        self.assertEqual([1, 2], [row['epoch'] for row in result.losses])
        for row in result.losses:
            for key in train.LOSS_COLUMNS:
                self.assertTrue(math.isfinite(row[key]))
        self.assertEqual(model.GENERATOR_KIND, result.generator.kind)
        self.assertEqual(model.DISCRIMINATOR_KIND, result.discriminator.kind)

        path = os.path.join(tempdir, 'losses.csv')
        train.write_losses(result.losses, path)
        with open(path) as fd:
            self.assertEqual('epoch,L_VAE,L_C,L_D,total', fd.readline()
                             .strip())
        self.assertEqual(result.losses, train.read_losses(path))

        generator = generators.CvgaeGenerator.from_checkpoint(
            result.generator)
        self.assertEqual('cvgae', generator.name)

    def test_deterministic(self):
        first = train.train_generator(fakes.toy_dataset(), tiny_config())
        second = train.train_generator(fakes.toy_dataset(), tiny_config())
        self.assertEqual(first.losses, second.losses)
        for name, value in first.generator.parameters.items():
            self.assertTrue(np.array_equal(
                value, second.generator.parameters[name]))

    def test_reconstruction_improves(self):
        cfg = tiny_config(variant='vgae', contrastive_weight=0.0,
                          adversarial_weight=0.0, learning_rate=0.01,
                          max_epochs=30)
        losses_ = train.train_generator(fakes.toy_dataset(), cfg).losses
        self.assertLessEqual(losses_[-1]['L_VAE'], losses_[0]['L_VAE'])
        self.assertEqual(0.0, losses_[-1]['L_D'])
        self.assertEqual(0.0, losses_[-1]['L_C'])

    def test_convergence_tolerance(self):
        cfg = tiny_config(max_epochs=10, convergence_tol=1e9)
        result = train.train_generator(fakes.toy_dataset(), cfg)
        self.assertEqual(2, len(result.losses))
        self.assertEqual(2, result.generator.metrics['epochs'])

    def test_empty_dataset(self):
        self.assertRaises(train.GeneratorTrainingError,
                          train.train_generator, [], tiny_config())


class TestPlan(testtools.TestCase):
    def test_plan_names(self):
        cfg = tiny_config()
        plan = task.plan_generators(cfg, ['random', 'identity'], ['vgae'],
                                    [1], {'lambda': [0.1], 'gamma': [3]})
        self.assertEqual(['cvgae', 'random', 'identity', 'vgae', 'cvgae-s1',
                          'no_contrastive-s1', 'no_penalty-s1',
                          'sweep-l0p1-g3'], [e['name'] for e in plan])
        by_name = dict((e['name'], e) for e in plan)
        self.assertEqual(common.GENERATOR, by_name['cvgae']['path'])
        self.assertIsNone(by_name['random']['config'])
        self.assertEqual(0.0, by_name['no_contrastive-s1']['config']
                         .contrastive_weight)
        self.assertEqual(0.1, by_name['sweep-l0p1-g3']['config']
                         .penalty_weight)
        self.assertEqual('vgae', by_name['vgae']['config'].variant)
        index = task.plan_index(plan)
        self.assertEqual('ablation', index['no_penalty-s1']['role'])
        self.assertEqual(0.0, index['no_penalty-s1']['config']
                         ['penalty_weight'])

    def test_unknown_baseline(self):
        self.assertRaises(common.ConfigError, task.plan_generators,
                          tiny_config(), ['oracle'])
        self.assertRaises(common.ConfigError, task.plan_generators,
                          tiny_config(), [], ['gae'])
