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

""" Block-diagonal batches of graphs for message passing.

A batch concatenates node features of several graphs and offsets their
edge lists. Each undirected edge becomes two directed messages;
``message_edge`` maps a message back to its undirected edge so one weight
per undirected edge drives both directions. """

import itertools

import torch


def all_pairs(node_count):
    return list(itertools.combinations(range(node_count), 2))


class GraphBatch(object):

    def __init__(self, features, edge_lists, labels=None,
                 dtype=torch.float32, feature_extra=None):
        self.num_graphs = len(features)
        self.node_counts = [int(f.shape[0]) for f in features]
        self.edge_lists = [list(edges) for edges in edge_lists]
        self.edge_counts = [len(edges) for edges in self.edge_lists]

        node_offsets = [0]
        for n in self.node_counts[:-1]:
            node_offsets.append(node_offsets[-1] + n)
        self.node_offsets = node_offsets

        edge_offsets = [0]
        for m in self.edge_counts[:-1]:
            edge_offsets.append(edge_offsets[-1] + m)
        self.edge_offsets = edge_offsets

        x = torch.cat([torch.as_tensor(f, dtype=dtype) for f in features])
        if feature_extra is not None:
            x = torch.cat([x, feature_extra.to(dtype)], dim=1)
        self.x = x

        self.batch = torch.cat([torch.full((n,), i, dtype=torch.long)
                                for i, n in enumerate(self.node_counts)])

        u, v = [], []
        for offset, edges in zip(node_offsets, self.edge_lists):
            for a, b in edges:
                u.append(offset + a)
                v.append(offset + b)
        u = torch.tensor(u, dtype=torch.long)
        v = torch.tensor(v, dtype=torch.long)
        total_edges = len(u)
        self.num_edges = total_edges
        self.edge_index = torch.stack([u, v]) if total_edges else \
            torch.zeros((2, 0), dtype=torch.long)
        self.src = torch.cat([u, v])
        self.dst = torch.cat([v, u])
        edge_ids = torch.arange(total_edges, dtype=torch.long)
        self.message_edge = torch.cat([edge_ids, edge_ids])

        self.labels = None
        if labels is not None:
            self.labels = torch.tensor(list(labels), dtype=torch.long)

    @property
    def dtype(self):
        return self.x.dtype

    @property
    def num_nodes(self):
        return int(self.x.shape[0])

    @classmethod
    def from_graphs(cls, graphs, dtype=torch.float32, edge_lists=None):
        if edge_lists is None:
            edge_lists = [g.edges for g in graphs]
        return cls([g.node_features for g in graphs], edge_lists,
                   labels=[g.label for g in graphs], dtype=dtype)

    @classmethod
    def complete(cls, graphs, dtype=torch.float32, feature_extra=None):
        """ Every node pair of every graph as a candidate edge. """
        return cls([g.node_features for g in graphs],
                   [all_pairs(g.node_count) for g in graphs],
                   labels=[g.label for g in graphs], dtype=dtype,
                   feature_extra=feature_extra)

    def edge_slices(self):
        for offset, count in zip(self.edge_offsets, self.edge_counts):
            yield slice(offset, offset + count)

    def node_slices(self):
        for offset, count in zip(self.node_offsets, self.node_counts):
            yield slice(offset, offset + count)

    def split_edges(self, values):
        """ Per-graph views of a per-edge tensor. """
        return [values[s] for s in self.edge_slices()]

    def edge_graph(self):
        """ Graph index of every undirected edge. """
        return torch.cat([torch.full((m,), i, dtype=torch.long)
                          for i, m in enumerate(self.edge_counts)]) \
            if self.num_edges else torch.zeros((0,), dtype=torch.long)
