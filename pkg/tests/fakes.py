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


import os

import numpy as np
import torch

from dse_bench.lib import graphs
from dse_bench.task_plugins.predictor import model
from dse_bench import worker_manager


def degree_features(node_count, edges, feature_dim=2):
    feats = np.ones((node_count, feature_dim), dtype=np.float32)
    feats[:, -1] = 0.0
    for u, v in edges:
        feats[u, -1] += 1
        feats[v, -1] += 1
    return feats


def make_graph(graph_id='g0', node_count=3, edges=((0, 1), (1, 2)), label=0,
               ground_truth_edges=None, feature_dim=2):
    return graphs.Graph(graph_id, node_count, edges,
                        degree_features(node_count, edges, feature_dim),
                        label, ground_truth_edges=ground_truth_edges)


def triangle(graph_id='tri', label=0):
    return make_graph(graph_id, 3, ((0, 1), (1, 2), (0, 2)), label,
                      ground_truth_edges=((0, 1),))


def path(graph_id='path', node_count=3, label=0):
    edges = [(i, i + 1) for i in range(node_count - 1)]
    return make_graph(graph_id, node_count, edges, label,
                      ground_truth_edges=edges[:1])


def toy_dataset():
    """ Three graphs per class on at most five nodes. """
    shapes = [
        (3, ((0, 1), (1, 2), (0, 2))),
        (4, ((0, 1), (1, 2), (2, 3))),
        (5, ((0, 1), (0, 2), (0, 3), (0, 4))),
    ]
    dataset = []
    for label, (n, edges) in enumerate(shapes):
        for copy in range(3):
            dataset.append(make_graph('toy-%d-%d' % (label, copy), n, edges,
                                      label, ground_truth_edges=edges[:2]))
    return sorted(dataset, key=lambda g: g.graph_id)


def toy_predictor(feature_dim=2, num_classes=3, seed=0, dtype=torch.float32,
                  test_ids=None):
    """ A small untrained classifier with a non-zero readout. """
    torch.manual_seed(seed)
    cfg = model.PredictorConfig(hidden_dim=8, num_layers=2)
    module = model.MessagePassingClassifier(feature_dim, num_classes,
                                            cfg.hidden_dim, cfg.num_layers)
    torch.nn.init.normal_(module.readout.weight, std=0.5)
    torch.nn.init.normal_(module.readout.bias, std=0.1)
    module.to(dtype)
    metrics = {}
    if test_ids is not None:
        metrics['test_ids'] = list(test_ids)
    return model.Predictor(module, config=cfg, metrics=metrics)


class FakeExperiment(object):
    """ Just enough of an Experiment for a single stage """

    def __init__(self, run_dir, config=None, workers=1):
        self.run_dir = run_dir
        self.config = config or {}
        self.cache = {}
        self.pool = worker_manager.WorkerPool(workers)

    def path(self, *parts):
        return os.path.join(self.run_dir, *parts)
