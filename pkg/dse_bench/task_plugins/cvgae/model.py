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

""" Conditional variational graph auto-encoder and its critic.

The encoder embeds every node twice, once in the full graph and once in
the conditioning subgraph, and concatenates the two Gaussian posteriors.
The decoder scores every node pair with an MLP over the concatenated
latent rows. """

import logging

import numpy as np
import torch
import torch.nn as nn

from dse_bench.lib import batching
from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import nn as gnn


log = logging.getLogger('task_plugins.cvgae.model')

GENERATOR_KIND = 'generator'
DISCRIMINATOR_KIND = 'discriminator'
TRAINED_VARIANTS = ('cvgae', 'vgae')
SIMILARITIES = ('cosine', 'dot')

MAX_LOG_SIGMA = 10.0
PROB_EPS = 1e-9


class GeneratorConfig(object):

    def __init__(self, encode_dim=256, hidden_dim=64, num_layers=3,
                 decoder_hidden=64, discriminator_hidden=64, batch_size=256,
                 learning_rate=2e-4, kl_weight=1e-4, contrastive_weight=3.0,
                 adversarial_weight=5.0, penalty_weight=5.0, temperature=0.1,
                 similarity='dot', masking_ratio=0.3, max_epochs=100,
                 convergence_tol=0.0, variant='cvgae', seed=17):
        self.encode_dim = int(encode_dim)
        self.hidden_dim = int(hidden_dim)
        self.num_layers = int(num_layers)
        self.decoder_hidden = int(decoder_hidden)
        self.discriminator_hidden = int(discriminator_hidden)
        self.batch_size = int(batch_size)
        self.learning_rate = float(learning_rate)
        self.kl_weight = float(kl_weight)
        self.contrastive_weight = float(contrastive_weight)
        self.adversarial_weight = float(adversarial_weight)
        self.penalty_weight = float(penalty_weight)
        self.temperature = float(temperature)
        self.similarity = similarity
        self.masking_ratio = float(masking_ratio)
        self.max_epochs = int(max_epochs)
        self.convergence_tol = float(convergence_tol)
        self.variant = variant
        self.seed = int(seed)
        self.validate()

    def validate(self):
        for key in ('encode_dim', 'hidden_dim', 'num_layers',
                    'decoder_hidden', 'discriminator_hidden', 'batch_size'):
            if getattr(self, key) <= 0:
                raise common.ConfigError('generator.%s must be positive' % key)
        if self.learning_rate <= 0 or self.temperature <= 0:
            raise common.ConfigError('generator.learning_rate and '
                                     'generator.temperature must be positive')
        # Zero weights are the ablations
        for key in ('kl_weight', 'contrastive_weight', 'adversarial_weight',
                    'penalty_weight', 'convergence_tol'):
            if getattr(self, key) < 0:
                raise common.ConfigError('generator.%s must be >= 0' % key)
        if not 0.0 < self.masking_ratio < 1.0:
            raise common.ConfigError('generator.masking_ratio must be in '
                                     '(0, 1)')
        if self.max_epochs < 0:
            raise common.ConfigError('generator.max_epochs must be >= 0')
        if self.variant not in TRAINED_VARIANTS:
            raise common.ConfigError("generator.variant must be one of %s"
                                     % ', '.join(TRAINED_VARIANTS))
        if self.similarity not in SIMILARITIES:
            raise common.ConfigError("generator.similarity must be one of %s"
                                     % ', '.join(SIMILARITIES))

    @classmethod
    def from_dict(cls, section):
        return common.config_from_dict(cls, section, 'generator')

    def to_dict(self):
        return dict((key, getattr(self, key)) for key in (
            'encode_dim', 'hidden_dim', 'num_layers', 'decoder_hidden',
            'discriminator_hidden', 'batch_size', 'learning_rate',
            'kl_weight', 'contrastive_weight', 'adversarial_weight',
            'penalty_weight', 'temperature', 'similarity', 'masking_ratio',
            'max_epochs', 'convergence_tol', 'variant', 'seed'))

    def replace(self, **kwargs):
        fields = self.to_dict()
        fields.update(kwargs)
        return GeneratorConfig(**fields)

    @property
    def conditional(self):
        return self.variant == 'cvgae'

    @property
    def adversarial(self):
        return self.variant == 'cvgae'


class LatentCode(object):

    """ Per-node posterior [mu1, mu2], [log_sigma1, log_sigma2] and a draw. """

    def __init__(self, mu, log_sigma, z):
        self.mu = mu
        self.log_sigma = log_sigma
        self.z = z

    @property
    def node_count(self):
        return int(self.mu.shape[-2])

    @property
    def dim(self):
        return int(self.mu.shape[-1])


def reparameterize(mu, log_sigma, eps=None):
    if eps is None:
        eps = torch.randn_like(mu)
    return mu + torch.exp(log_sigma) * eps


class EdgeProbMatrix(object):

    """ p(A_ij | z_i, z_j) for every unordered node pair. """

    def __init__(self, node_count, probs):
        self.node_count = node_count
        self.pairs = batching.all_pairs(node_count)
        self.probs = np.asarray(probs, dtype=np.float64)
        self._index = dict((p, i) for i, p in enumerate(self.pairs))

    def get(self, u, v):
        return float(self.probs[self._index[graphs.canonical_edge(u, v)]])

    def as_dict(self):
        return dict(zip(self.pairs, self.probs.tolist()))


class ConditionalEncoder(nn.Module):

    def __init__(self, feature_dim, encode_dim, hidden_dim, num_layers,
                 conditional=True):
        super(ConditionalEncoder, self).__init__()
        self.conditional = conditional
        self.trunk = gnn.GraphConvStack(feature_dim, hidden_dim, num_layers)
        self.mu_head = gnn.GraphConv(hidden_dim, encode_dim, activation=False)
        self.sigma_head = gnn.GraphConv(hidden_dim, encode_dim,
                                        activation=False)

    def encode_one(self, batch):
        h = self.trunk(batch.x, batch)
        mu = self.mu_head(h, batch)
        log_sigma = self.sigma_head(h, batch).clamp(max=MAX_LOG_SIGMA)
        return mu, log_sigma

    def forward(self, full, sub):
        """ Posterior parameters of shape (nodes, 2 * encode_dim).

        Without conditioning both halves come from the subgraph. """
        mu2, ls2 = self.encode_one(sub)
        if self.conditional:
            mu1, ls1 = self.encode_one(full)
        else:
            mu1, ls1 = mu2, ls2
        return torch.cat([mu1, mu2], dim=-1), torch.cat([ls1, ls2], dim=-1)


class PairDecoder(nn.Module):

    """ f_A([z_i, z_j]) as a one hidden layer MLP.

    The first layer is applied as W_a z_i + W_b z_j so node rows are
    projected once rather than once per pair. """

    def __init__(self, latent_dim, hidden_dim):
        super(PairDecoder, self).__init__()
        self.lin_a = nn.Linear(latent_dim, hidden_dim)
        self.lin_b = nn.Linear(latent_dim, hidden_dim, bias=False)
        self.out = nn.Linear(hidden_dim, 1)

    def directed(self, a, b, u, v):
        return self.out(torch.relu(a[..., u, :] + b[..., v, :])).squeeze(-1)

    def forward(self, z, u, v):
        """ Symmetrised logits for pairs (u[k], v[k]); z may carry a
        leading sample dimension. """
        a = self.lin_a(z)
        b = self.lin_b(z)
        return (self.directed(a, b, u, v) + self.directed(a, b, v, u)) / 2.0


class CVGAE(nn.Module):

    def __init__(self, feature_dim, cfg):
        super(CVGAE, self).__init__()
        self.feature_dim = feature_dim
        self.encoder = ConditionalEncoder(feature_dim, cfg.encode_dim,
                                          cfg.hidden_dim, cfg.num_layers,
                                          conditional=cfg.conditional)
        self.decoder = PairDecoder(2 * cfg.encode_dim, cfg.decoder_hidden)

    def forward(self, full, sub, eps=None):
        mu, log_sigma = self.encoder(full, sub)
        return LatentCode(mu, log_sigma, reparameterize(mu, log_sigma, eps))

    def pair_logits(self, z, u, v):
        return self.decoder(z, u, v)


class Discriminator(nn.Module):

    """ Class-conditional critic over weighted complete graphs.

    The label enters as a one-hot vector appended to every node's
    features; pair weights are the (soft) adjacency. The score is
    unbounded. """

    def __init__(self, feature_dim, num_classes, hidden_dim, num_layers):
        super(Discriminator, self).__init__()
        self.num_classes = num_classes
        self.convs = gnn.GraphConvStack(feature_dim + num_classes, hidden_dim,
                                        num_layers)
        self.score = nn.Linear(hidden_dim, 1)

    def condition(self, graph_list, dtype=torch.float32):
        """ Complete-pair batch with the one-hot label on every node. """
        onehot = torch.cat([
            nn.functional.one_hot(
                torch.full((g.node_count,), g.label, dtype=torch.long),
                self.num_classes)
            for g in graph_list]).to(dtype)
        return batching.GraphBatch.complete(graph_list, dtype=dtype,
                                            feature_extra=onehot)

    def forward(self, batch, pair_weight):
        h = self.convs(batch.x, batch, pair_weight)
        return self.score(gnn.mean_pool(h, batch)).squeeze(-1)


def _check_node_sets(g, g_s):
    if g.graph_id != g_s.graph_id or g.node_count != g_s.node_count:
        raise graphs.IdentityError(
            "conditioning graph '%s' (%d nodes) does not share the node set "
            "of '%s' (%d nodes)" % (g_s.graph_id, g_s.node_count, g.graph_id,
                                    g.node_count))


def encode(model, g, g_s, eps=None):
    """ LatentCode of the pair (g, g_s) for one graph. """
    _check_node_sets(g, g_s)
    full = batching.GraphBatch.from_graphs([g])
    sub = batching.GraphBatch.from_graphs([g_s])
    return model(full, sub, eps)


def decode(model, z, node_count):
    """ EdgeProbMatrix from latent rows ``z`` (a LatentCode or a tensor). """
    if isinstance(z, LatentCode):
        z = z.z
    pairs = batching.all_pairs(node_count)
    if not pairs:
        return EdgeProbMatrix(node_count, [])
    u = torch.tensor([p[0] for p in pairs], dtype=torch.long)
    v = torch.tensor([p[1] for p in pairs], dtype=torch.long)
    with torch.no_grad():
        logits = model.pair_logits(z, u, v)
    return EdgeProbMatrix(node_count, pair_probabilities(logits))


def pair_probabilities(logits):
    """ Sigmoid in float64, kept strictly inside (0, 1). """
    probs = torch.sigmoid(logits.detach().to(torch.float64)).numpy()
    return np.clip(probs, PROB_EPS, 1.0 - PROB_EPS)
