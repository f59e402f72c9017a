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
import math
import os

import fixtures
import numpy as np
import testtools

from dse_bench.lib import graphs
from tests import fakes


def random_graph(rng, index):
    """ A random valid graph; ground truth absent, empty or a subset. """
    node_count = int(rng.integers(1, 9))
    pairs = list(itertools.combinations(range(node_count), 2))
    edges = [p for p in pairs if rng.random() < 0.4]
    features = rng.normal(size=(node_count, int(rng.integers(1, 4))))
    choice = rng.integers(0, 3)
    gt = None
    if choice == 1:
        gt = []
    elif choice == 2:
        gt = [e for e in edges if rng.random() < 0.5]
    return graphs.Graph('rg-%d' % index, node_count, edges, features,
                        int(rng.integers(0, 3)), ground_truth_edges=gt)


class TestGraph(testtools.TestCase):
    def test_edges_are_canonical_and_sorted(self):
        g = fakes.make_graph('g', 4, [(3, 2), (1, 0), (2, 0)])
        self.assertEqual(((0, 1), (0, 2), (2, 3)), g.edges)
        self.assertTrue(g.has_edge(3, 2))
        self.assertFalse(g.has_edge(1, 3))

    def test_rejects_bad_edges(self):
        feats = np.ones((3, 2))
        self.assertRaises(graphs.GraphError, graphs.Graph,
                          'g', 3, [(1, 1)], feats, 0)
        self.assertRaises(graphs.GraphError, graphs.Graph,
                          'g', 3, [(0, 1), (1, 0)], feats, 0)
        self.assertRaises(graphs.GraphError, graphs.Graph,
                          'g', 3, [(0, 3)], feats, 0)
        self.assertRaises(graphs.GraphError, graphs.Graph,
                          'g', 3, [(0, 1)], feats, 0,
                          ground_truth_edges=[(1, 2)])

    def test_rejects_bad_identity(self):
        feats = np.ones((3, 2))
        self.assertRaises(graphs.GraphError, graphs.Graph,
                          'two words', 3, [], feats, 0)
        self.assertRaises(graphs.GraphError, graphs.Graph,
                          'g', 3, [], np.ones((2, 2)), 0)

    def test_immutable(self):
        g = fakes.triangle()
        self.assertRaises(AttributeError, setattr, g, 'label', 2)
        self.assertRaises(ValueError, g.node_features.__setitem__,
                          (0, 0), 5.0)

    def test_replace(self):
        g = fakes.triangle()
        h = g.replace(edges=[(0, 1)], ground_truth_edges=None)
        self.assertEqual(((0, 1),), h.edges)
        self.assertEqual(3, len(g.edges))
        self.assertEqual(g.graph_id, h.graph_id)
        self.assertNotEqual(g, h)


class TestEdgeMask(testtools.TestCase):
    def test_top_fraction_counts(self):
        g = fakes.path('p', 21)
        scores = dict((e, float(i)) for i, e in enumerate(g.edges))
        mask = graphs.top_fraction_mask(scores, 0.15, parent_id='p')
        self.assertEqual(3, len(mask.selected))
        self.assertEqual(set(g.edges[-3:]), mask.selected)

    def test_ties_go_to_smaller_edge(self):
        g = fakes.triangle()
        scores = dict((e, 0.5) for e in g.edges)
        mask = graphs.top_fraction_mask(scores, 0.34, parent_id=g.graph_id)
        self.assertEqual(frozenset([(0, 1), (0, 2)]), mask.selected)

    def test_at_least_one_edge(self):
        g = fakes.triangle()
        scores = dict((e, 0.0) for e in g.edges)
        mask = graphs.top_fraction_mask(scores, 0.01, parent_id=g.graph_id)
        self.assertEqual(1, len(mask.selected))

    def test_bad_inputs(self):
        self.assertRaises(graphs.EmptyInputError,
                          graphs.top_fraction_mask, {}, 0.5)
        self.assertRaises(graphs.GraphError, graphs.top_fraction_mask,
                          {(0, 1): 1.0}, 0.0)
        self.assertRaises(graphs.GraphError, graphs.top_fraction_mask,
                          {(0, 1): 1.0}, 1.5)

    def test_complement_and_parent(self):
        g = fakes.triangle()
        mask = graphs.mask_from_edges(g, [(0, 1)])
        self.assertEqual(frozenset([(0, 2), (1, 2)]),
                         mask.complement(g).selected)
        other = fakes.triangle('other')
        self.assertRaises(graphs.IdentityError, mask.check_parent, other)
        self.assertRaises(graphs.GraphError, graphs.mask_from_edges, g,
                          [(0, 3)])

    def test_ground_truth_mask(self):
        g = fakes.triangle()
        self.assertEqual(frozenset([(0, 1)]),
                         graphs.ground_truth_mask(g).selected)
        bare = g.replace(ground_truth_edges=None)
        self.assertRaises(graphs.GraphError, graphs.ground_truth_mask, bare)

    def test_induce_subgraph_keeps_nodes(self):
        g = fakes.triangle()
        sub = graphs.induce_subgraph(g, graphs.mask_from_edges(g, [(1, 2)]))
        self.assertEqual(3, sub.node_count)
        self.assertEqual(((1, 2),), sub.edges)
        self.assertEqual(frozenset(), sub.ground_truth_edges)
        self.assertTrue(np.array_equal(g.node_features, sub.node_features))
        self.assertRaises(graphs.IdentityError, graphs.induce_subgraph,
                          fakes.triangle('x'), graphs.mask_from_edges(g, []))

    def test_induce_subgraph_idempotent(self):
        rng = np.random.default_rng(3)
        for i in range(200):
            g = random_graph(rng, i)
            if not g.edges:
                continue
            scores = dict((e, float(rng.random())) for e in g.edges)
            mask = graphs.top_fraction_mask(scores, 1.0 - rng.random(),
                                            parent_id=g.graph_id)
            once = graphs.induce_subgraph(g, mask)
            self.assertEqual(once, graphs.induce_subgraph(once, mask))

    def test_top_fraction_size_law(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            n = int(rng.integers(1, 60))
            scores = dict(((0, i + 1), float(rng.random())) for i in range(n))
            ratio = 1.0 - rng.random()
            mask = graphs.top_fraction_mask(scores, ratio)
            self.assertEqual(math.ceil(ratio * n), len(mask.selected))


class TestSurrogateSample(testtools.TestCase):
    def test_positive_log_likelihood(self):
        self.assertRaises(graphs.GraphError, graphs.SurrogateSample,
                          'tri', [(0, 1)], 0.1, [])

    def test_contains_subgraph(self):
        s = graphs.SurrogateSample('tri', [(0, 1), (1, 2)], -1.0, [(1, 0)])
        self.assertTrue(s.contains_subgraph)
        s = graphs.SurrogateSample('tri', [(1, 2)], -1.0, [(0, 1)])
        self.assertFalse(s.contains_subgraph)

    def test_to_graph(self):
        g = fakes.triangle()
        s = graphs.SurrogateSample('tri', [(1, 2)], -0.5, [])
        star = s.to_graph(g)
        self.assertEqual(((1, 2),), star.edges)
        self.assertIsNone(star.ground_truth_edges)
        self.assertRaises(graphs.IdentityError, s.to_graph,
                          fakes.triangle('x'))


class TestSerialisation(testtools.TestCase):
    def test_dataset_file(self):
        tempdir = self.useFixture(fixtures.TempDir()).path
        path = os.path.join(tempdir, 'toy.txt')
        dataset = fakes.toy_dataset()
        graphs.write_dataset(dataset, path)
        self.assertEqual(dataset, graphs.read_dataset(path))

    def test_random_round_trips(self):
        rng = np.random.default_rng(11)
        for i in range(1000):
            g = random_graph(rng, i)
            self.assertEqual(g, graphs.parse_graph(graphs.serialize_graph(g)))

    def test_empty_ground_truth_round_trip(self):
        g = fakes.triangle()
        sub = graphs.induce_subgraph(g, graphs.mask_from_edges(g, [(1, 2)]))
        self.assertEqual(frozenset(), sub.ground_truth_edges)
        back = graphs.parse_graph(graphs.serialize_graph(sub))
        self.assertEqual(frozenset(), back.ground_truth_edges)
        self.assertEqual(sub, back)

    def test_edgeless_round_trip(self):
        g = fakes.make_graph('lone', 3, [])
        self.assertEqual(g, graphs.parse_graph(graphs.serialize_graph(g)))

    def test_truncated_payload(self):
        g = fakes.make_graph('g', 4, [(0, 1), (1, 2), (2, 3)],
                             ground_truth_edges=[(0, 1), (1, 2)])
        lines = graphs.serialize_graph(g).splitlines(True)
        for cut in range(1, len(lines)):
            payload = b''.join(lines[:cut])
            self.assertRaises(graphs.ParseError, graphs.parse_graph, payload)
        no_gt = g.replace(ground_truth_edges=None)
        lines = graphs.serialize_graph(no_gt).splitlines(True)
        self.assertRaises(graphs.ParseError, graphs.parse_graph,
                          b''.join(lines[:-1]))

    def test_format(self):
        g = fakes.make_graph('g', 2, [(0, 1)], label=1,
                             ground_truth_edges=[(0, 1)])
        self.assertEqual(b'graph g 2 1 1 1\n'
                         b'feat 0 1.0 1.0\n'
                         b'feat 1 1.0 1.0\n'
                         b'edge 0 1\n'
                         b'gt 0 1\n', graphs.serialize_graph(g))

    def test_parse_error_offset(self):
        payload = (b'graph a 2 0 1 -\n'
                   b'feat 0 1.0\n'
                   b'feat 1 1.0\n'
                   b'edge 0 x\n')
        e = self.assertRaises(graphs.ParseError, graphs.parse_graphs,
                              payload)
        self.assertEqual(38, e.offset)

    def test_parse_errors(self):
        self.assertRaises(graphs.ParseError, graphs.parse_graphs,
                          b'edge 0 1\n')
        self.assertRaises(graphs.ParseError, graphs.parse_graphs,
                          b'graph a 2 0 0 -\nfeat 0 1.0\n')
        self.assertRaises(graphs.ParseError, graphs.parse_graphs,
                          b'graph a 2 0 0 -\nfeat 0 1.0\nfeat 1 1.0 2.0\n')
        self.assertRaises(graphs.ParseError, graphs.parse_graphs,
                          b'graph a 2 0 1 -\nfeat 0 1\nfeat 1 1\nedge 0 0\n')
        self.assertRaises(graphs.ParseError, graphs.parse_graph, b'')
        self.assertRaises(graphs.ParseError, graphs.parse_graphs,
                          b'graph a 2 0\nfeat 0 1\nfeat 1 1\n')
        self.assertRaises(graphs.ParseError, graphs.parse_graphs,
                          b'graph a 2 0 0 -\nfeat 0 1\nfeat 1 1\ngt 0 1\n')

    def test_parse_graph(self):
        g = graphs.parse_graph('graph b 3 2 1 -\nfeat 0 1\nfeat 1 1\n'
                               'feat 2 1\nedge 2 0\n')
        self.assertEqual('b', g.graph_id)
        self.assertEqual(((0, 2),), g.edges)
        self.assertIsNone(g.ground_truth_edges)
        self.assertEqual(2, g.label)
