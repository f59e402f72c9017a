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

""" Message passing layers shared by the predictor, the generator's
encoder and the discriminator. """

import torch
import torch.nn as nn


def propagate(h, batch, edge_weight=None):
    """ Weighted sum of neighbour states for every node. """
    messages = h[batch.src]
    if edge_weight is not None:
        messages = messages * edge_weight[batch.message_edge].unsqueeze(-1)
    out = torch.zeros_like(h)
    return out.index_add(0, batch.dst, messages)


def mean_pool(h, batch):
    sums = torch.zeros((batch.num_graphs, h.shape[1]), dtype=h.dtype)
    sums = sums.index_add(0, batch.batch, h)
    counts = torch.tensor(batch.node_counts, dtype=h.dtype).unsqueeze(-1)
    return sums / counts


class GraphConv(nn.Module):

    """ h_i' = act(W_self h_i + W_nbr sum_j w_ij h_j + b) """

    def __init__(self, in_dim, out_dim, activation=True):
        super(GraphConv, self).__init__()
        self.lin_self = nn.Linear(in_dim, out_dim)
        self.lin_nbr = nn.Linear(in_dim, out_dim, bias=False)
        self.activation = activation

    def forward(self, h, batch, edge_weight=None):
        out = self.lin_self(h) + self.lin_nbr(propagate(h, batch,
                                                        edge_weight))
        if self.activation:
            out = torch.relu(out)
        return out


class GraphConvStack(nn.Module):

    def __init__(self, in_dim, hidden_dim, num_layers):
        super(GraphConvStack, self).__init__()
        dims = [in_dim] + [hidden_dim] * num_layers
        self.layers = nn.ModuleList(GraphConv(a, b)
                                    for a, b in zip(dims[:-1], dims[1:]))

    def forward(self, h, batch, edge_weight=None):
        for layer in self.layers:
            h = layer(h, batch, edge_weight)
        return h
