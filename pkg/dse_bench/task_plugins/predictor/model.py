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

""" The graph classifier whose explanations are evaluated. """

import logging
import math

import numpy as np
import torch
import torch.nn as nn

from dse_bench.lib import batching
from dse_bench.lib import checkpoint
from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import nn as gnn


log = logging.getLogger('task_plugins.predictor.model')

CHECKPOINT_KIND = 'predictor'


class ShapeError(Exception):
    pass


class TrainingError(Exception):
    def __init__(self, message, epoch):
        super(TrainingError, self).__init__('%s (epoch %d)' % (message, epoch))
        self.epoch = epoch


class PredictorConfig(object):

    def __init__(self, hidden_dim=64, num_layers=3, learning_rate=1e-3,
                 weight_decay=1e-5, max_epochs=100, batch_size=64,
                 test_fraction=0.2, seed=17):
        self.hidden_dim = int(hidden_dim)
        self.num_layers = int(num_layers)
        self.learning_rate = float(learning_rate)
        self.weight_decay = float(weight_decay)
        self.max_epochs = int(max_epochs)
        self.batch_size = int(batch_size)
        self.test_fraction = float(test_fraction)
        self.seed = int(seed)
        self.validate()

    def validate(self):
        for key in ('hidden_dim', 'num_layers', 'batch_size'):
            if getattr(self, key) <= 0:
                raise common.ConfigError('predictor.%s must be positive'
                                         % key)
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise common.ConfigError('predictor learning rate must be '
                                     'positive and weight decay >= 0')
        if self.max_epochs < 0:
            raise common.ConfigError('predictor.max_epochs must be >= 0')
        if not 0.0 <= self.test_fraction < 1.0:
            raise common.ConfigError('predictor.test_fraction must be in '
                                     '[0, 1)')

    @classmethod
    def from_dict(cls, section):
        return common.config_from_dict(cls, section, 'predictor')

    def to_dict(self):
        return dict(hidden_dim=self.hidden_dim, num_layers=self.num_layers,
                    learning_rate=self.learning_rate,
                    weight_decay=self.weight_decay,
                    max_epochs=self.max_epochs, batch_size=self.batch_size,
                    test_fraction=self.test_fraction, seed=self.seed)


class MessagePassingClassifier(nn.Module):

    """ Sum-aggregation message passing, mean pooling, linear readout.

    The readout starts at zero so an untrained model is uniform. """

    def __init__(self, feature_dim, num_classes, hidden_dim=64, num_layers=3):
        super(MessagePassingClassifier, self).__init__()
        self.feature_dim = feature_dim
        self.num_classes = num_classes
        self.convs = gnn.GraphConvStack(feature_dim, hidden_dim, num_layers)
        self.readout = nn.Linear(hidden_dim, num_classes)
        nn.init.zeros_(self.readout.weight)
        nn.init.zeros_(self.readout.bias)

    def embed(self, batch, edge_weight=None):
        if batch.x.shape[1] != self.feature_dim:
            raise ShapeError('model expects %d node features, got %d'
                             % (self.feature_dim, batch.x.shape[1]))
        return self.convs(batch.x, batch, edge_weight)

    def readout_logits(self, h, batch):
        return self.readout(gnn.mean_pool(h, batch))

    def forward(self, batch, edge_weight=None):
        return self.readout_logits(self.embed(batch, edge_weight), batch)


class Predictor(object):

    """ A frozen classifier with graph-level helpers.

    Inference never mutates the module, so one Predictor can serve many
    threads. """

    def __init__(self, module, config=None, metrics=None):
        self.module = module
        self.module.eval()
        self.config = config
        self.metrics = dict(metrics or {})

    @property
    def num_classes(self):
        return self.module.num_classes

    @property
    def dtype(self):
        return next(self.module.parameters()).dtype

    def batch(self, graph_list, edge_lists=None):
        return batching.GraphBatch.from_graphs(graph_list, dtype=self.dtype,
                                               edge_lists=edge_lists)

    def _check(self, g):
        if g.feature_dim != self.module.feature_dim:
            raise ShapeError("graph '%s' has %d node features, model "
                             "expects %d" % (g.graph_id, g.feature_dim,
                                             self.module.feature_dim))

    def predict_many(self, graph_list, edge_lists=None):
        """ Class probabilities, one float64 row per graph. """
        for g in graph_list:
            self._check(g)
        if not graph_list:
            return np.zeros((0, self.num_classes))
        with torch.no_grad():
            logits = self.module(self.batch(graph_list, edge_lists))
            probs = torch.softmax(logits.to(torch.float64), dim=-1)
        return probs.numpy()

    def forward(self, g):
        return self.predict_many([g])[0]

    def importance_removal(self, mask, g, target_class):
        """ Target probability of the explanatory subgraph on its own. """
        return float(self.forward(graphs.induce_subgraph(g, mask))
                     [target_class])

    def to_checkpoint(self):
        config = self.config.to_dict() if self.config else {}
        config['feature_dim'] = self.module.feature_dim
        config['num_classes'] = self.module.num_classes
        return checkpoint.ModelCheckpoint.from_module(
            CHECKPOINT_KIND, self.module, config=config, metrics=self.metrics)

    @classmethod
    def from_checkpoint(cls, ckpt):
        config = dict(ckpt.config)
        feature_dim = config.pop('feature_dim')
        num_classes = config.pop('num_classes')
        cfg = PredictorConfig(**config)
        module = MessagePassingClassifier(feature_dim, num_classes,
                                          cfg.hidden_dim, cfg.num_layers)
        ckpt.load_into(module)
        return cls(module, config=cfg, metrics=ckpt.metrics)

    @classmethod
    def load(cls, path):
        return cls.from_checkpoint(
            checkpoint.ModelCheckpoint.load(path, kind=CHECKPOINT_KIND))

    def save(self, path):
        self.to_checkpoint().save(path)


def split_dataset(dataset, test_fraction, seed):
    """ Seeded train/test split; a single graph always trains. """
    order = np.random.default_rng(
        common.derive_seed(seed, 'split')).permutation(len(dataset))
    n_test = int(math.floor(len(dataset) * test_fraction))
    if len(dataset) - n_test < 1:
        n_test = len(dataset) - 1
    test_idx = sorted(order[:n_test].tolist())
    train_idx = sorted(order[n_test:].tolist())
    return ([dataset[i] for i in train_idx], [dataset[i] for i in test_idx])


def accuracy(predictor, dataset, batch_size=256):
    if not dataset:
        return None
    correct = 0
    for start in range(0, len(dataset), batch_size):
        chunk = dataset[start:start + batch_size]
        probs = predictor.predict_many(chunk)
        correct += int(sum(int(np.argmax(p)) == g.label
                           for p, g in zip(probs, chunk)))
    return correct / float(len(dataset))


def train(dataset, cfg, num_classes=None):
    """ Supervised training with Adam; returns a frozen Predictor whose
    metrics carry train/test accuracy and the split seed. """
    if not dataset:
        raise TrainingError('empty dataset', 0)
    if num_classes is None:
        num_classes = max(g.label for g in dataset) + 1
    for g in dataset:
        if not 0 <= g.label < num_classes:
            raise TrainingError("graph '%s' label %d out of range"
                                % (g.graph_id, g.label), 0)

    torch.manual_seed(common.derive_seed(cfg.seed, 'predictor-init'))
    feature_dim = dataset[0].feature_dim
    module = MessagePassingClassifier(feature_dim, num_classes,
                                      cfg.hidden_dim, cfg.num_layers)
    optimizer = torch.optim.Adam(module.parameters(), lr=cfg.learning_rate,
                                 weight_decay=cfg.weight_decay)
    loss_fn = nn.CrossEntropyLoss()

    train_set, test_set = split_dataset(dataset, cfg.test_fraction, cfg.seed)
    log.info('Training predictor on %d graphs, %d held out'
             % (len(train_set), len(test_set)))
    shuffle = np.random.default_rng(common.derive_seed(cfg.seed, 'shuffle'))

    for epoch in range(1, cfg.max_epochs + 1):
        module.train()
        order = shuffle.permutation(len(train_set))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            chunk = [train_set[i] for i in order[start:start + cfg.batch_size]]
            batch = batching.GraphBatch.from_graphs(chunk)
            loss = loss_fn(module(batch), batch.labels)
            if not torch.isfinite(loss):
                raise TrainingError('loss is %s' % loss.item(), epoch)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(chunk)
        log.info('Epoch %d: loss %.4f' % (epoch, total / len(train_set)))

    predictor = Predictor(module, config=cfg)
    predictor.metrics = {
        'train_accuracy': accuracy(predictor, train_set),
        'test_accuracy': accuracy(predictor, test_set),
        'split_seed': cfg.seed,
        'num_train': len(train_set),
        'num_test': len(test_set),
        'test_ids': [g.graph_id for g in test_set],
    }
    log.info('Predictor train accuracy %s, test accuracy %s'
             % (predictor.metrics['train_accuracy'],
                predictor.metrics['test_accuracy']))
    return predictor
