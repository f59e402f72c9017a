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

""" Surrogate generators.

A generator completes a conditioning subgraph over its parent's node set:
the conditioning edges are always kept and every other node pair (a free
pair) is drawn as an independent Bernoulli. The learned generator reads
its free-pair probabilities off the decoder; the baselines use fixed ones.
"""

import itertools
import logging

import numpy as np
import torch

from dse_bench.lib import batching
from dse_bench.lib import checkpoint
from dse_bench.lib import graphs
from dse_bench.task_plugins.cvgae import model


log = logging.getLogger('task_plugins.cvgae.generators')

BASELINES = ('random', 'identity', 'full_graph')


class UnknownGeneratorError(Exception):
    pass


def free_pairs(g, conditioning):
    return [p for p in batching.all_pairs(g.node_count)
            if p not in conditioning]


class SurrogateGenerator(object):

    """ Base for all generators; subclasses supply pair probabilities. """

    name = None

    def pair_probs(self, g, conditioning, rngs):
        """ Probabilities over ``free_pairs``: one row per rng, or a single
        row at the posterior mean when ``rngs`` is None. """
        raise NotImplementedError()

    def pool_log_likelihoods(self, g_star, pool):
        """ Unnormalised log P(G'_k | G*) for every pool edge set.

        Generators without a posterior treat the pool as uniform. """
        return np.zeros(len(pool))

    def _conditioning(self, g, mask):
        mask.check_parent(g)
        return frozenset(mask.selected)

    def sample_surrogates(self, g, mask, rngs):
        """ One SurrogateSample per rng. """
        conditioning = self._conditioning(g, mask)
        pairs = free_pairs(g, conditioning)
        if not pairs:
            return [graphs.SurrogateSample(g.graph_id, conditioning, 0.0,
                                           conditioning) for _ in rngs]
        probs = self.pair_probs(g, conditioning, rngs)
        samples = []
        for rng, row in zip(rngs, probs):
            drawn = rng.random(len(pairs)) < row
            chosen = np.where(drawn, row, 1.0 - row)
            with np.errstate(divide='ignore'):
                log_likelihood = float(np.log(chosen).sum())
            edges = set(conditioning)
            edges.update(p for p, d in zip(pairs, drawn) if d)
            samples.append(graphs.SurrogateSample(
                g.graph_id, edges, min(log_likelihood, 0.0), conditioning))
        return samples

    def sample_surrogate(self, g, mask, rng):
        return self.sample_surrogates(g, mask, [rng])[0]

    def enumerate_surrogates(self, g, mask, max_free_pairs=12):
        """ Every surrogate with its probability under the mean posterior. """
        conditioning = self._conditioning(g, mask)
        pairs = free_pairs(g, conditioning)
        if len(pairs) > max_free_pairs:
            raise graphs.GraphError("graph '%s' has %d free pairs, too many "
                                    "to enumerate" % (g.graph_id, len(pairs)))
        probs = self.pair_probs(g, conditioning, None)[0] if pairs else []
        out = []
        for bits in itertools.product((False, True), repeat=len(pairs)):
            p = 1.0
            for bit, q in zip(bits, probs):
                p *= q if bit else 1.0 - q
            if p == 0.0:
                continue
            edges = set(conditioning)
            edges.update(pair for pair, bit in zip(pairs, bits) if bit)
            out.append((graphs.SurrogateSample(g.graph_id, edges, np.log(p),
                                               conditioning), p))
        return out


class CvgaeGenerator(SurrogateGenerator):

    """ Free-pair probabilities from the trained conditional VAE. """

    def __init__(self, module, config, name=None):
        self.module = module
        self.module.eval()
        self.config = config
        self.name = name or config.variant

    def _latent_dim(self):
        return 2 * self.config.encode_dim

    def pair_probs(self, g, conditioning, rngs):
        g_s = g.replace(edges=sorted(conditioning), ground_truth_edges=None)
        full = batching.GraphBatch.from_graphs([g])
        sub = batching.GraphBatch.from_graphs([g_s])
        pairs = free_pairs(g, conditioning)
        u = torch.tensor([p[0] for p in pairs], dtype=torch.long)
        v = torch.tensor([p[1] for p in pairs], dtype=torch.long)
        with torch.no_grad():
            mu, log_sigma = self.module.encoder(full, sub)
            if rngs is None:
                z = mu.unsqueeze(0)
            else:
                eps = torch.from_numpy(np.stack([
                    rng.standard_normal((g.node_count, self._latent_dim()))
                    for rng in rngs])).to(mu.dtype)
                z = model.reparameterize(mu.unsqueeze(0),
                                         log_sigma.unsqueeze(0), eps)
            logits = self.module.pair_logits(z, u, v)
        return model.pair_probabilities(logits)

    def pool_log_likelihoods(self, g_star, pool):
        """ sum_{(i,j) in G'_k} log p_ij with Z = mu of encode(G*, G'_k). """
        if not pool:
            return np.zeros(0)
        stars = [g_star] * len(pool)
        subs = [g_star.replace(edges=sorted(edges), ground_truth_edges=None)
                for edges in pool]
        full = batching.GraphBatch.from_graphs(stars)
        sub = batching.GraphBatch.from_graphs(subs)
        with torch.no_grad():
            mu, _ = self.module.encoder(full, sub)
        out = []
        for k, (nodes, edges) in enumerate(zip(full.node_slices(), pool)):
            edges = sorted(edges)
            if not edges:
                out.append(0.0)
                continue
            u = torch.tensor([e[0] for e in edges], dtype=torch.long)
            v = torch.tensor([e[1] for e in edges], dtype=torch.long)
            with torch.no_grad():
                logits = self.module.pair_logits(mu[nodes], u, v)
            out.append(float(np.log(model.pair_probabilities(logits)).sum()))
        return np.array(out)

    def to_checkpoint(self, metrics=None):
        config = self.config.to_dict()
        config['feature_dim'] = self.module.feature_dim
        return checkpoint.ModelCheckpoint.from_module(
            model.GENERATOR_KIND, self.module, config=config, metrics=metrics)

    @classmethod
    def from_checkpoint(cls, ckpt, name=None):
        config = dict(ckpt.config)
        feature_dim = config.pop('feature_dim')
        config.pop('num_classes', None)
        cfg = model.GeneratorConfig(**config)
        module = model.CVGAE(feature_dim, cfg)
        ckpt.load_into(module)
        return cls(module, cfg, name=name)


class FixedProbabilityGenerator(SurrogateGenerator):

    """ Every free pair drawn with the same probability. """

    def __init__(self, probability, name='random'):
        self.probability = float(probability)
        self.name = name

    def pair_probs(self, g, conditioning, rngs):
        count = len(free_pairs(g, conditioning))
        rows = 1 if rngs is None else len(rngs)
        return np.full((rows, count), self.probability)

    def to_checkpoint(self, metrics=None):
        return checkpoint.ModelCheckpoint(
            model.GENERATOR_KIND, {},
            config={'variant': self.name, 'density': self.probability},
            metrics=metrics)


class RandomGenerator(FixedProbabilityGenerator):

    """ Free pairs at the training set's edge density. """

    def __init__(self, density):
        super(RandomGenerator, self).__init__(density, name='random')

    @classmethod
    def fit(cls, dataset):
        pairs = sum(g.node_count * (g.node_count - 1) // 2 for g in dataset)
        edges = sum(len(g.edges) for g in dataset)
        return cls(edges / float(pairs) if pairs else 0.0)


class IdentityGenerator(FixedProbabilityGenerator):

    """ Returns the conditioning subgraph unchanged. """

    def __init__(self):
        super(IdentityGenerator, self).__init__(0.0, name='identity')


class FullGraphGenerator(SurrogateGenerator):

    """ Completes any subgraph back to the parent graph exactly. """

    name = 'full_graph'

    def pair_probs(self, g, conditioning, rngs):
        row = [1.0 if p in g.edge_set else 0.0
               for p in free_pairs(g, conditioning)]
        return np.array([row] * (1 if rngs is None else len(rngs)),
                        dtype=np.float64)

    def to_checkpoint(self, metrics=None):
        return checkpoint.ModelCheckpoint(
            model.GENERATOR_KIND, {}, config={'variant': self.name},
            metrics=metrics)


def load_generator(path, name=None):
    ckpt = checkpoint.ModelCheckpoint.load(path, kind=model.GENERATOR_KIND)
    variant = ckpt.config.get('variant')
    if variant == 'random':
        return RandomGenerator(ckpt.config['density'])
    if variant == 'identity':
        return IdentityGenerator()
    if variant == 'full_graph':
        return FullGraphGenerator()
    return CvgaeGenerator.from_checkpoint(ckpt, name=name)


def baseline(name, dataset=None):
    if name == 'random':
        return RandomGenerator.fit(dataset)
    if name == 'identity':
        return IdentityGenerator()
    if name == 'full_graph':
        return FullGraphGenerator()
    raise UnknownGeneratorError("unknown baseline generator '%s', expected "
                                "one of %s" % (name, ', '.join(BASELINES)))
