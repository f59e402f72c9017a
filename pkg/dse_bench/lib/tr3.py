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

""" Synthetic tree + motif graphs.

Each graph is a uniform random tree (random Pruefer sequence) joined to one
motif by a single bridge edge. The motif kind is the label and the motif
edges are the ground-truth explanation.

Motif templates, node indices local to the motif::

    house   square 0-1-2-3-0 with a roof apex 4 joined to 0 and 1
            (5 nodes, 6 edges)
    cycle   hexagon 0-1-2-3-4-5-0 (6 nodes, 6 edges)
    crane   triangle head 0-1-2, neck 2-3-4-5, legs 5-6 and 5-7
            (8 nodes, 8 edges)

The crane has a single cycle: a connected 8-node, 8-edge shape cannot hold
two triangles. Node features are ``feature_dim - 1`` ones followed by the
node degree in the full graph (just ones when degree features are off). """

import collections
import logging

import networkx as nx
import numpy as np

from dse_bench.lib import common
from dse_bench.lib import graphs


log = logging.getLogger('lib.tr3')

MOTIF_SET = ('house', 'cycle', 'crane')

MotifTemplate = collections.namedtuple('MotifTemplate',
                                       ['kind', 'node_count', 'edges'])

_TEMPLATES = {
    'house': MotifTemplate('house', 5, ((0, 1), (1, 2), (2, 3), (0, 3),
                                        (0, 4), (1, 4))),
    'cycle': MotifTemplate('cycle', 6, ((0, 1), (1, 2), (2, 3), (3, 4),
                                        (4, 5), (0, 5))),
    'crane': MotifTemplate('crane', 8, ((0, 1), (1, 2), (0, 2), (2, 3),
                                        (3, 4), (4, 5), (5, 6), (5, 7))),
}


class UnknownMotifError(Exception):
    pass


class Tr3Config(object):

    def __init__(self, num_graphs=3000, base_nodes_min=8, base_nodes_max=15,
                 seed=17, feature_dim=2, degree_feature=True,
                 motif_set=MOTIF_SET):
        self.num_graphs = int(num_graphs)
        self.base_nodes_min = int(base_nodes_min)
        self.base_nodes_max = int(base_nodes_max)
        self.seed = int(seed)
        self.feature_dim = int(feature_dim)
        self.degree_feature = bool(degree_feature)
        self.motif_set = tuple(motif_set)
        self.validate()

    def validate(self):
        if self.num_graphs <= 0 or self.num_graphs % len(MOTIF_SET):
            raise common.ConfigError(
                'data.num_graphs must be a positive multiple of 3')
        if self.base_nodes_min < 3:
            raise common.ConfigError('data.base_nodes_min must be >= 3')
        if self.base_nodes_max < self.base_nodes_min:
            raise common.ConfigError(
                'data.base_nodes_max must be >= base_nodes_min')
        if self.feature_dim < 1:
            raise common.ConfigError('data.feature_dim must be positive')
        if self.motif_set != MOTIF_SET:
            raise common.ConfigError('data.motif_set is fixed to %s'
                                     % (list(MOTIF_SET),))

    @classmethod
    def from_dict(cls, section):
        return common.config_from_dict(cls, section, 'data')

    def to_dict(self):
        return dict(num_graphs=self.num_graphs,
                    base_nodes_min=self.base_nodes_min,
                    base_nodes_max=self.base_nodes_max,
                    seed=self.seed, feature_dim=self.feature_dim,
                    degree_feature=self.degree_feature,
                    motif_set=list(self.motif_set))


def motif_template(kind):
    try:
        return _TEMPLATES[kind]
    except KeyError:
        raise UnknownMotifError("unknown motif '%s'" % kind)


def motif_graph(kind):
    """ The motif alone as a networkx graph. """
    template = motif_template(kind)
    g = nx.Graph()
    g.add_nodes_from(range(template.node_count))
    g.add_edges_from(template.edges)
    return g


def random_tree(node_count, rng):
    prufer = rng.integers(0, node_count, size=node_count - 2).tolist()
    return nx.from_prufer_sequence(prufer)


def node_features(degrees, cfg):
    n = len(degrees)
    if not cfg.degree_feature:
        return np.ones((n, cfg.feature_dim), dtype=np.float32)
    feats = np.ones((n, cfg.feature_dim), dtype=np.float32)
    feats[:, -1] = degrees
    return feats


def generate_graph(index, cfg):
    """ Build graph ``index``; label cycles through the motif set. """
    rng = np.random.default_rng(common.derive_seed(cfg.seed, 'tr3', index))
    label = index % len(MOTIF_SET)
    template = motif_template(MOTIF_SET[label])

    tree_size = int(rng.integers(cfg.base_nodes_min, cfg.base_nodes_max + 1))
    tree = random_tree(tree_size, rng)

    # motif nodes follow the tree nodes before relabelling
    g = nx.Graph()
    g.add_nodes_from(range(tree_size + template.node_count))
    g.add_edges_from(tree.edges())
    motif_edges = [(tree_size + u, tree_size + v) for u, v in template.edges]
    g.add_edges_from(motif_edges)
    anchor = int(rng.integers(0, tree_size))
    hook = tree_size + int(rng.integers(0, template.node_count))
    g.add_edge(anchor, hook)

    perm = rng.permutation(g.number_of_nodes())
    edges = [(int(perm[u]), int(perm[v])) for u, v in g.edges()]
    gt = [(int(perm[u]), int(perm[v])) for u, v in motif_edges]

    degrees = np.zeros(g.number_of_nodes(), dtype=np.float32)
    for u, v in edges:
        degrees[u] += 1
        degrees[v] += 1

    return graphs.Graph('tr3-%05d' % index, g.number_of_nodes(), edges,
                        node_features(degrees, cfg), label,
                        ground_truth_edges=gt)


def generate_dataset(cfg, pool=None):
    """ Generate ``cfg.num_graphs`` graphs, balanced over the motifs.

    Every graph draws from its own seed so a WorkerPool may build them in
    any order. """
    units = dict((i, (generate_graph, (i, cfg)))
                 for i in range(cfg.num_graphs))
    if pool is None:
        dataset = [fn(*args) for fn, args in
                   (units[i] for i in range(cfg.num_graphs))]
    else:
        results = pool.map_units(units)
        dataset = [results[i] for i in range(cfg.num_graphs)]
    log.info('Generated %d graphs' % len(dataset))
    return dataset


def class_counts(dataset):
    counts = collections.Counter(MOTIF_SET[g.label] for g in dataset)
    return dict((kind, counts.get(kind, 0)) for kind in MOTIF_SET)


def check_graph(g):
    """ Structural checks every generated graph satisfies. """
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.node_count))
    nxg.add_edges_from(g.edges)
    template = motif_template(MOTIF_SET[g.label])
    return (nx.is_connected(nxg) and
            len(g.ground_truth_edges) == len(template.edges) and
            g.ground_truth_edges <= g.edge_set and
            g.node_features.shape[0] == g.node_count)
