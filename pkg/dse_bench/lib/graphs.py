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

""" Graph, edge mask and surrogate types shared by every stage.

Graphs are undirected and immutable once built. Edges are stored as sorted
``(min, max)`` tuples in lexicographic order, which is also the tie-break
order for top-k selection.

The on-disk format is line oriented::

    graph <id> <node_count> <label> <edge_count> <gt_count>
    feat <i> v1 v2 ...
    edge <u> <v>
    gt <u> <v>

``gt_count`` is ``-`` for a graph without ground truth. The counts let a
payload cut at a line boundary fail to parse. A dataset file is a
concatenation of graphs separated by blank lines. """

import logging
import math

import numpy as np


log = logging.getLogger('lib.graphs')


class GraphError(Exception):
    pass


class IdentityError(GraphError):
    pass


class EmptyInputError(GraphError):
    pass


class ParseError(GraphError):
    def __init__(self, message, offset):
        super(ParseError, self).__init__('%s (at byte %d)' % (message, offset))
        self.offset = offset


def canonical_edge(u, v):
    u, v = int(u), int(v)
    return (u, v) if u < v else (v, u)


class Graph(object):

    """ An undirected attributed graph with a class label and, optionally,
    the ground-truth explanation edges. """

    __slots__ = ('graph_id', 'node_count', 'edges', 'node_features', 'label',
                 'ground_truth_edges', '_edge_set')

    def __init__(self, graph_id, node_count, edges, node_features, label,
                 ground_truth_edges=None):
        graph_id = str(graph_id)
        if not graph_id or len(graph_id.split()) != 1:
            raise GraphError("graph_id '%s' must be a single token" % graph_id)
        node_count = int(node_count)
        if node_count < 1:
            raise GraphError('%s: node_count must be positive' % graph_id)

        edge_set = set()
        for u, v in edges:
            if u == v:
                raise GraphError('%s: self-loop on node %d' % (graph_id, u))
            e = canonical_edge(u, v)
            if e[0] < 0 or e[1] >= node_count:
                raise GraphError('%s: edge %s out of range' % (graph_id, e))
            if e in edge_set:
                raise GraphError('%s: duplicate edge %s' % (graph_id, e))
            edge_set.add(e)

        features = np.array(node_features, dtype=np.float32, copy=True)
        if features.ndim != 2 or features.shape[0] != node_count:
            raise GraphError('%s: node_features must be %d rows, got %s'
                             % (graph_id, node_count, features.shape))
        features.setflags(write=False)

        if ground_truth_edges is not None:
            ground_truth_edges = frozenset(canonical_edge(u, v)
                                           for u, v in ground_truth_edges)
            if not ground_truth_edges <= edge_set:
                raise GraphError('%s: ground truth edges not in graph'
                                 % graph_id)

        object.__setattr__(self, 'graph_id', graph_id)
        object.__setattr__(self, 'node_count', node_count)
        object.__setattr__(self, 'edges', tuple(sorted(edge_set)))
        object.__setattr__(self, '_edge_set', frozenset(edge_set))
        object.__setattr__(self, 'node_features', features)
        object.__setattr__(self, 'label', int(label))
        object.__setattr__(self, 'ground_truth_edges', ground_truth_edges)

    def __setattr__(self, name, value):
        raise AttributeError('Graph is immutable')

    @property
    def feature_dim(self):
        return self.node_features.shape[1]

    @property
    def edge_set(self):
        return self._edge_set

    def has_edge(self, u, v):
        return canonical_edge(u, v) in self._edge_set

    def replace(self, **kwargs):
        fields = dict(graph_id=self.graph_id, node_count=self.node_count,
                      edges=self.edges, node_features=self.node_features,
                      label=self.label,
                      ground_truth_edges=self.ground_truth_edges)
        fields.update(kwargs)
        return Graph(**fields)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.graph_id == other.graph_id and
                self.node_count == other.node_count and
                self.label == other.label and
                self.edges == other.edges and
                self.ground_truth_edges == other.ground_truth_edges and
                np.array_equal(self.node_features, other.node_features))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __hash__(self):
        return hash((self.graph_id, self.node_count, self.edges))

    def __repr__(self):
        return '<Graph %s nodes=%d edges=%d label=%d>' % (
            self.graph_id, self.node_count, len(self.edges), self.label)


class EdgeMask(object):

    """ Per-edge scores over a parent graph plus the selected edge subset. """

    __slots__ = ('parent_id', 'scores', 'selected')

    def __init__(self, parent_id, scores, selected):
        scores = dict((canonical_edge(u, v), float(s))
                      for (u, v), s in scores.items())
        selected = frozenset(canonical_edge(u, v) for u, v in selected)
        if not selected <= set(scores):
            raise GraphError('%s: selected edges must be scored' % parent_id)
        object.__setattr__(self, 'parent_id', str(parent_id))
        object.__setattr__(self, 'scores', scores)
        object.__setattr__(self, 'selected', selected)

    def __setattr__(self, name, value):
        raise AttributeError('EdgeMask is immutable')

    @property
    def ratio(self):
        if not self.scores:
            return 0.0
        return len(self.selected) / float(len(self.scores))

    def ordered_scores(self):
        """ Scores in lexicographic edge order. """
        return [self.scores[e] for e in sorted(self.scores)]

    def check_parent(self, g):
        if self.parent_id != g.graph_id:
            raise IdentityError("mask for '%s' applied to graph '%s'"
                                % (self.parent_id, g.graph_id))
        if set(self.scores) != g.edge_set:
            raise IdentityError("mask edges do not match graph '%s'"
                                % g.graph_id)

    def complement(self, g):
        self.check_parent(g)
        return mask_from_edges(g, g.edge_set - self.selected)

    def __eq__(self, other):
        if not isinstance(other, EdgeMask):
            return NotImplemented
        return (self.parent_id == other.parent_id and
                self.scores == other.scores and
                self.selected == other.selected)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __repr__(self):
        return '<EdgeMask %s selected=%d/%d>' % (
            self.parent_id, len(self.selected), len(self.scores))


class SurrogateSample(object):

    """ A generated completion of a subgraph over its parent's node set. """

    __slots__ = ('parent_id', 'edges', 'log_likelihood', 'contains_subgraph')

    def __init__(self, parent_id, edges, log_likelihood, conditioning_edges):
        edges = frozenset(canonical_edge(u, v) for u, v in edges)
        conditioning = frozenset(canonical_edge(u, v)
                                 for u, v in conditioning_edges)
        log_likelihood = float(log_likelihood)
        if log_likelihood > 0.0:
            raise GraphError('%s: surrogate log likelihood %f is positive'
                             % (parent_id, log_likelihood))
        object.__setattr__(self, 'parent_id', str(parent_id))
        object.__setattr__(self, 'edges', edges)
        object.__setattr__(self, 'log_likelihood', log_likelihood)
        object.__setattr__(self, 'contains_subgraph', conditioning <= edges)

    def __setattr__(self, name, value):
        raise AttributeError('SurrogateSample is immutable')

    def to_graph(self, g):
        """ The surrogate as a Graph over g's nodes and features. """
        if self.parent_id != g.graph_id:
            raise IdentityError("surrogate of '%s' applied to graph '%s'"
                                % (self.parent_id, g.graph_id))
        return Graph(g.graph_id, g.node_count, self.edges, g.node_features,
                     g.label)

    def __repr__(self):
        return '<SurrogateSample %s edges=%d ll=%.3f>' % (
            self.parent_id, len(self.edges), self.log_likelihood)


def mask_from_edges(g, edges):
    """ A mask selecting exactly ``edges`` (score 1) out of g's edges. """
    edges = frozenset(canonical_edge(u, v) for u, v in edges)
    if not edges <= g.edge_set:
        raise GraphError("edges %s not in graph '%s'"
                         % (sorted(edges - g.edge_set), g.graph_id))
    scores = dict((e, 1.0 if e in edges else 0.0) for e in g.edges)
    return EdgeMask(g.graph_id, scores, edges)


def ground_truth_mask(g):
    if g.ground_truth_edges is None:
        raise GraphError("graph '%s' has no ground truth" % g.graph_id)
    return mask_from_edges(g, g.ground_truth_edges)


def top_fraction_mask(scores, ratio, parent_id=''):
    """ Select the ceil(ratio * |edges|) highest scoring edges.

    Ties go to the lexicographically smaller edge. """
    if not scores:
        raise EmptyInputError('cannot select from an empty score map')
    ratio = float(ratio)
    if not 0.0 < ratio <= 1.0:
        raise GraphError('ratio %r must be in (0, 1]' % ratio)

    canonical = dict((canonical_edge(u, v), float(s))
                     for (u, v), s in scores.items())
    # Guard against 0.15 * 20 == 3.0000000000000004
    k = int(math.ceil(round(ratio * len(canonical), 9)))
    k = max(1, min(k, len(canonical)))
    ranked = sorted(canonical, key=lambda e: (-canonical[e], e))
    return EdgeMask(parent_id, canonical, ranked[:k])


def induce_subgraph(g, mask):
    """ Keep all of g's nodes and features but only the selected edges.

    The mask may come from g or from a graph g was induced from, so
    inducing twice with one mask gives the same graph. """
    if mask.parent_id != g.graph_id:
        raise IdentityError("mask for '%s' applied to graph '%s'"
                            % (mask.parent_id, g.graph_id))
    if not mask.selected <= g.edge_set:
        raise IdentityError("mask selects edges missing from graph '%s'"
                            % g.graph_id)
    gt = None
    if g.ground_truth_edges is not None:
        gt = g.ground_truth_edges & mask.selected
    return Graph(g.graph_id, g.node_count, mask.selected, g.node_features,
                 g.label, ground_truth_edges=gt)


def _format_float(value):
    return repr(float(value))


def serialize_graph(g):
    gt = g.ground_truth_edges
    lines = ['graph %s %d %d %d %s' % (g.graph_id, g.node_count, g.label,
                                       len(g.edges),
                                       '-' if gt is None else len(gt))]
    for i, row in enumerate(g.node_features):
        lines.append(' '.join(['feat', str(i)] +
                              [_format_float(v) for v in row]))
    for u, v in g.edges:
        lines.append('edge %d %d' % (u, v))
    if g.ground_truth_edges is not None:
        for u, v in sorted(g.ground_truth_edges):
            lines.append('gt %d %d' % (u, v))
    return ('\n'.join(lines) + '\n').encode('utf-8')


def _split_records(payload):
    """ Yield (offset, line) pairs for every line in a payload. """
    offset = 0
    for raw in payload.split(b'\n'):
        yield offset, raw
        offset += len(raw) + 1


def _parse_int(token, offset, what):
    try:
        return int(token)
    except ValueError:
        raise ParseError('bad %s %r' % (what, token), offset)


def _build(header, feats, edges, gts, end_offset):
    offset, graph_id, node_count, label, edge_count, gt_count = header
    if len(edges) != edge_count:
        raise ParseError("graph '%s' has %d of %d edges"
                         % (graph_id, len(edges), edge_count), end_offset)
    if gt_count is not None and len(gts) != gt_count:
        raise ParseError("graph '%s' has %d of %d ground truth edges"
                         % (graph_id, len(gts), gt_count), end_offset)
    if gt_count is None and gts:
        raise ParseError("graph '%s' has undeclared ground truth"
                         % graph_id, end_offset)
    if len(feats) != node_count:
        raise ParseError("graph '%s' has %d of %d feature rows"
                         % (graph_id, len(feats), node_count), end_offset)
    widths = set(len(row) for _, row in feats.values())
    if len(widths) > 1:
        raise ParseError("graph '%s' has ragged feature rows" % graph_id,
                         end_offset)
    rows = [feats[i][1] for i in range(node_count)]
    try:
        return Graph(graph_id, node_count, edges, rows, label,
                     ground_truth_edges=None if gt_count is None else gts)
    except GraphError as e:
        raise ParseError(str(e), offset)


def parse_graphs(payload):
    """ Parse one or more blank-line separated graphs. """
    if isinstance(payload, str):
        payload = payload.encode('utf-8')
    graphs = []
    header = None
    feats, edges, gts = {}, [], []
    last_offset = 0

    for offset, raw in _split_records(payload):
        last_offset = offset
        line = raw.strip()
        if not line:
            if header is not None:
                graphs.append(_build(header, feats, edges, gts, offset))
                header = None
            continue
        try:
            tokens = line.decode('utf-8').split()
        except UnicodeDecodeError:
            raise ParseError('line is not utf-8', offset)
        kind = tokens[0]

        if kind == 'graph':
            if header is not None:
                graphs.append(_build(header, feats, edges, gts, offset))
            if len(tokens) != 6:
                raise ParseError('graph header needs 5 fields', offset)
            gt_count = None
            if tokens[5] != '-':
                gt_count = _parse_int(tokens[5], offset, 'gt count')
            header = (offset, tokens[1],
                      _parse_int(tokens[2], offset, 'node count'),
                      _parse_int(tokens[3], offset, 'label'),
                      _parse_int(tokens[4], offset, 'edge count'), gt_count)
            feats, edges, gts = {}, [], []
            continue

        if header is None:
            raise ParseError("'%s' line outside a graph" % kind, offset)
        if kind == 'feat':
            if len(tokens) < 3:
                raise ParseError('feat line needs values', offset)
            i = _parse_int(tokens[1], offset, 'node index')
            if i in feats or not 0 <= i < header[2]:
                raise ParseError('bad feature row %d' % i, offset)
            try:
                feats[i] = (offset, [float(t) for t in tokens[2:]])
            except ValueError:
                raise ParseError('bad feature value', offset)
        elif kind in ('edge', 'gt'):
            if len(tokens) != 3:
                raise ParseError('%s line needs 2 fields' % kind, offset)
            e = (_parse_int(tokens[1], offset, 'node'),
                 _parse_int(tokens[2], offset, 'node'))
            if kind == 'edge':
                edges.append(e)
            else:
                gts.append(e)
        else:
            raise ParseError("unknown record '%s'" % kind, offset)

    if header is not None:
        graphs.append(_build(header, feats, edges, gts, last_offset))
    return graphs


def parse_graph(payload):
    graphs = parse_graphs(payload)
    if len(graphs) != 1:
        raise ParseError('expected one graph, found %d' % len(graphs), 0)
    return graphs[0]


def write_dataset(graphs, path):
    with open(path, 'wb') as fd:
        for i, g in enumerate(graphs):
            if i:
                fd.write(b'\n')
            fd.write(serialize_graph(g))
    log.debug('Wrote %d graphs to %s' % (len(graphs), path))


def read_dataset(path):
    with open(path, 'rb') as fd:
        graphs = parse_graphs(fd.read())
    log.debug('Read %d graphs from %s' % (len(graphs), path))
    return graphs
