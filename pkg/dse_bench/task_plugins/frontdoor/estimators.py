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

""" Importance of an explanatory subgraph through generated surrogates.

``reduced`` averages the predictor over surrogates drawn from the
generator conditioned on the subgraph. ``weighted`` additionally adjusts
over a pool of random subgraphs, weighting each pool member by its prior
over the generator's posterior. ``deletion`` contrasts the full graph with
the surrogates of the explanation's complement. """

import json
import logging

import numpy as np
from scipy import special

from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.task_plugins.explainers import explainers


log = logging.getLogger('task_plugins.frontdoor.estimators')

ESTIMATORS = ('reduced', 'weighted')
POOL_CONDITIONING = ('surrogate', 'union')


class DegenerateWeightsError(Exception):
    pass


class DseConfig(object):

    def __init__(self, num_surrogates=50, estimator='reduced',
                 adjustment_pool_size=32, pool_conditioning='surrogate',
                 target='label', exact_max_free_pairs=0, seed=17):
        self.num_surrogates = int(num_surrogates)
        self.estimator = estimator
        self.adjustment_pool_size = int(adjustment_pool_size)
        self.pool_conditioning = pool_conditioning
        self.target = target
        self.exact_max_free_pairs = int(exact_max_free_pairs)
        self.seed = int(seed)
        self.validate()

    def validate(self):
        if self.num_surrogates < 1:
            raise common.ConfigError('dse.num_surrogates must be >= 1')
        if self.adjustment_pool_size < 1:
            raise common.ConfigError('dse.adjustment_pool_size must be >= 1')
        if self.estimator not in ESTIMATORS:
            raise common.ConfigError('dse.estimator must be one of %s'
                                     % ', '.join(ESTIMATORS))
        if self.pool_conditioning not in POOL_CONDITIONING:
            raise common.ConfigError('dse.pool_conditioning must be one of %s'
                                     % ', '.join(POOL_CONDITIONING))
        if self.target not in explainers.TARGET_MODES:
            raise common.ConfigError('dse.target must be one of %s'
                                     % ', '.join(explainers.TARGET_MODES))
        if self.exact_max_free_pairs < 0:
            raise common.ConfigError('dse.exact_max_free_pairs must be >= 0')

    @classmethod
    def from_dict(cls, section):
        return common.config_from_dict(cls, section, 'dse')

    def to_dict(self):
        return dict((key, getattr(self, key)) for key in (
            'num_surrogates', 'estimator', 'adjustment_pool_size',
            'pool_conditioning', 'target', 'exact_max_free_pairs', 'seed'))

    def replace(self, **kwargs):
        fields = self.to_dict()
        fields.update(kwargs)
        return DseConfig(**fields)


class ImportanceRecord(object):

    FIELDS = ('graph_id', 'explainer', 'target_class', 'imp_re', 'imp_dse',
              'imp_dse_deletion', 'estimator', 'surrogate_probs')

    def __init__(self, graph_id, explainer, target_class, imp_re, imp_dse,
                 imp_dse_deletion, estimator, surrogate_probs=()):
        self.graph_id = graph_id
        self.explainer = explainer
        self.target_class = int(target_class)
        self.imp_re = float(imp_re)
        self.imp_dse = float(imp_dse)
        self.imp_dse_deletion = float(imp_dse_deletion)
        self.estimator = estimator
        self.surrogate_probs = [[float(p) for p in row]
                                for row in surrogate_probs]

    @property
    def key(self):
        return (self.graph_id, self.explainer)

    def to_dict(self):
        return dict((f, getattr(self, f)) for f in self.FIELDS)

    @classmethod
    def from_dict(cls, record):
        return cls(**dict((f, record[f]) for f in cls.FIELDS))

    def __eq__(self, other):
        return isinstance(other, ImportanceRecord) and \
            self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return '<ImportanceRecord %s/%s re=%.3f dse=%.3f>' % (
            self.graph_id, self.explainer, self.imp_re, self.imp_dse)


def write_records(records, path):
    with open(path, 'w') as fd:
        for record in sorted(records, key=lambda r: r.key):
            fd.write(json.dumps(record.to_dict(), sort_keys=True))
            fd.write('\n')


def read_records(path):
    with open(path) as fd:
        return [ImportanceRecord.from_dict(json.loads(line))
                for line in fd if line.strip()]


def stream_rngs(seed, graph_id, stream, count):
    """ One independent generator per sample index. """
    return [np.random.default_rng(common.derive_seed(seed, graph_id, stream,
                                                     k))
            for k in range(count)]


def _exact(g, mask, cfg):
    if not cfg.exact_max_free_pairs:
        return False
    free = g.node_count * (g.node_count - 1) // 2 - len(mask.selected)
    return free <= cfg.exact_max_free_pairs


def surrogate_distribution(generator, g, mask, cfg, stream):
    """ (surrogate graphs, probability weights) for one conditioning mask.

    Exact enumeration when the free pairs are few enough, otherwise
    ``num_surrogates`` equally weighted draws. """
    if _exact(g, mask, cfg):
        pairs = generator.enumerate_surrogates(g, mask,
                                               cfg.exact_max_free_pairs)
        return ([s.to_graph(g) for s, _ in pairs],
                np.array([p for _, p in pairs]))
    rngs = stream_rngs(cfg.seed, g.graph_id, stream, cfg.num_surrogates)
    samples = generator.sample_surrogates(g, mask, rngs)
    return ([s.to_graph(g) for s in samples],
            np.full(len(samples), 1.0 / len(samples)))


def _expectation(values, weights):
    if np.all(weights == weights[0]):
        return float(np.mean(values))
    return float(np.dot(weights, values))


def reduced_terms(predictor, generator, g, mask, target_class, cfg,
                  stream='reduced'):
    """ The reduced estimate plus every surrogate's class probabilities. """
    stars, weights = surrogate_distribution(generator, g, mask,
                                            cfg, stream)
    probs = predictor.predict_many(stars)
    return _expectation(probs[:, target_class], weights), probs


def imp_dse_reduced(predictor, generator, g, mask, target_class, cfg,
                    stream='reduced'):
    return reduced_terms(predictor, generator, g, mask, target_class, cfg,
                         stream)[0]


def adjustment_pool(g, size, count, rng):
    """ ``count`` random edge subsets of g, each with ``size`` edges. """
    edges = list(g.edges)
    pool = []
    for _ in range(count):
        idx = rng.choice(len(edges), size=size, replace=False) \
            if size else []
        pool.append(frozenset(edges[i] for i in idx))
    return pool


def posterior_weights(log_likelihoods):
    """ Normalised P(G') / P(G' | G*) with a uniform prior P(G').

    Pool members the generator gives zero probability are dropped. """
    ll = np.asarray(log_likelihoods, dtype=np.float64)
    finite = np.isfinite(ll)
    if not finite.any():
        raise DegenerateWeightsError('every adjustment pool member has zero '
                                     'posterior probability')
    log_post = np.full(ll.shape, -np.inf)
    log_post[finite] = ll[finite] - special.logsumexp(ll[finite])
    log_w = np.where(finite, -log_post, -np.inf)
    w = np.exp(log_w - log_w[finite].max())
    return w / w.sum()


def weighted_terms(predictor, generator, g, mask, target_class, cfg,
                   stream='reduced'):
    stars, weights = surrogate_distribution(generator, g, mask,
                                            cfg, stream)
    pool_rng = np.random.default_rng(
        common.derive_seed(cfg.seed, g.graph_id, stream, 'pool'))
    pool = adjustment_pool(g, len(mask.selected), cfg.adjustment_pool_size,
                           pool_rng)
    probs = predictor.predict_many(stars)
    values = []
    for star, row in zip(stars, probs):
        w = posterior_weights(generator.pool_log_likelihoods(star, pool))
        if cfg.pool_conditioning == 'union':
            joined = [star.replace(edges=sorted(star.edge_set | member))
                      for member in pool]
            outcome = predictor.predict_many(joined)[:, target_class]
        else:
            outcome = np.full(len(pool), row[target_class])
        values.append(float(np.dot(w, outcome)))
    return _expectation(np.array(values), weights), probs


def imp_dse_weighted(predictor, generator, g, mask, target_class, cfg,
                     stream='reduced'):
    return weighted_terms(predictor, generator, g, mask, target_class, cfg,
                          stream)[0]


def imp_dse(predictor, generator, g, mask, target_class, cfg,
            stream='reduced'):
    """ The configured estimator's value and surrogate probabilities. """
    mask.check_parent(g)
    if cfg.estimator == 'weighted':
        return weighted_terms(predictor, generator, g, mask, target_class,
                              cfg, stream)
    return reduced_terms(predictor, generator, g, mask, target_class, cfg,
                         stream)


def imp_dse_deletion(predictor, generator, g, mask, target_class, cfg,
                     stream='deletion'):
    """ f(g)[t] minus the reduced estimate of the complement mask. """
    full = float(predictor.forward(g)[target_class])
    return full - imp_dse_reduced(predictor, generator, g, mask.complement(g),
                                  target_class, cfg, stream)


def evaluate_graph(predictor, generator, g, masks, cfg):
    """ Records for every (kind, mask) explaining one graph. """
    target = explainers.target_class(predictor, g, cfg.target)
    records = []
    for kind in sorted(masks):
        mask = masks[kind]
        imp_re = predictor.importance_removal(mask, g, target)
        value, probs = imp_dse(predictor, generator, g, mask, target, cfg,
                               stream=kind)
        deletion = imp_dse_deletion(predictor, generator, g, mask, target,
                                    cfg, stream=kind + '/deletion')
        records.append(ImportanceRecord(
            g.graph_id, kind, target, imp_re, value, deletion,
            cfg.estimator, probs.tolist()))
    return records


def evaluate_all(dataset, masks, predictor, generator, cfg, pool=None):
    """ One record per (graph, explainer), ordered by that key.

    ``masks`` maps (graph_id, kind) to EdgeMask; graphs without masks are
    skipped. Surrogate draws are seeded per (graph_id, explainer, sample
    index) so the result does not depend on scheduling. """
    by_graph = {}
    for (graph_id, kind), mask in masks.items():
        by_graph.setdefault(graph_id, {})[kind] = mask
    lookup = dict((g.graph_id, g) for g in dataset)
    missing = sorted(set(by_graph) - set(lookup))
    if missing:
        raise graphs.IdentityError('masks reference unknown graphs: %s'
                                   % ', '.join(missing[:5]))

    units = dict((graph_id, (evaluate_graph,
                             (predictor, generator, lookup[graph_id],
                              by_graph[graph_id], cfg)))
                 for graph_id in by_graph)
    if pool is None:
        results = dict((key, fn(*args)) for key, (fn, args) in units.items())
    else:
        results = pool.map_units(units)
    records = []
    for graph_id in sorted(results):
        records.extend(results[graph_id])
    log.info('Evaluated %d records over %d graphs'
             % (len(records), len(results)))
    return records
