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

""" Per-edge importance scores for a frozen predictor.

Every explainer returns an EdgeMask scoring each edge of the parent graph
and selecting the top ``mask_ratio`` fraction of them. """

import json
import logging
import math

import numpy as np
import torch

from dse_bench.lib import common
from dse_bench.lib import graphs


log = logging.getLogger('task_plugins.explainers.explainers')

KINDS = ('sa', 'gradcam', 'maskopt', 'occlusion', 'screener', 'random')
TARGET_MODES = ('label', 'predicted')


class OptimizationError(Exception):
    pass


class UnknownExplainerError(Exception):
    pass


class ExplainerConfig(object):

    def __init__(self, kind='sa', mask_ratio=0.15, maskopt_steps=200,
                 maskopt_lr=0.01, maskopt_sparsity_coeff=0.005, seed=17):
        self.kind = kind
        self.mask_ratio = float(mask_ratio)
        self.maskopt_steps = int(maskopt_steps)
        self.maskopt_lr = float(maskopt_lr)
        self.maskopt_sparsity_coeff = float(maskopt_sparsity_coeff)
        self.seed = int(seed)
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise UnknownExplainerError(
                "Unknown explainer '%s', expected one of %s"
                % (self.kind, ', '.join(KINDS)))
        if not 0.0 < self.mask_ratio <= 1.0:
            raise common.ConfigError('explainers.mask_ratio must be in (0, 1]')
        if self.maskopt_steps < 0:
            raise common.ConfigError('explainers.maskopt_steps must be >= 0')
        if self.maskopt_lr <= 0 or self.maskopt_sparsity_coeff < 0:
            raise common.ConfigError('explainers.maskopt_lr must be positive '
                                     'and the sparsity coefficient >= 0')

    @classmethod
    def from_dict(cls, section):
        return common.config_from_dict(cls, section, 'explainers')

    def for_kind(self, kind):
        return ExplainerConfig(kind=kind, **dict(
            (k, v) for k, v in self.to_dict().items() if k != 'kind'))

    def to_dict(self):
        return dict(kind=self.kind, mask_ratio=self.mask_ratio,
                    maskopt_steps=self.maskopt_steps,
                    maskopt_lr=self.maskopt_lr,
                    maskopt_sparsity_coeff=self.maskopt_sparsity_coeff,
                    seed=self.seed)


def target_class(predictor, g, mode='label'):
    if mode == 'label':
        return g.label
    if mode == 'predicted':
        return int(np.argmax(predictor.forward(g)))
    raise common.ConfigError("dse.target must be one of %s, got '%s'"
                             % (', '.join(TARGET_MODES), mode))


def selection_budget(ratio, edge_count):
    """ ceil(ratio * edge_count), the same count top_fraction_mask keeps. """
    k = int(math.ceil(round(ratio * edge_count, 9)))
    return max(1, min(k, edge_count))


def _to_mask(g, values, ratio):
    scores = dict(zip(g.edges, (float(v) for v in values)))
    return graphs.top_fraction_mask(scores, ratio, parent_id=g.graph_id)


def _edge_weights(predictor, g, fill=1.0):
    return torch.full((len(g.edges),), fill, dtype=predictor.dtype,
                      requires_grad=True)


def explain_sa(predictor, g, target_class, ratio=0.15):
    """ |d logit_target / d w_e| at all edge weights 1. """
    weights = _edge_weights(predictor, g)
    logits = predictor.module(predictor.batch([g]), weights)
    grad, = torch.autograd.grad(logits[0, target_class], weights,
                                allow_unused=True)
    if grad is None:
        grad = torch.zeros_like(weights)
    return _to_mask(g, grad.abs().detach().tolist(), ratio)


def gradcam_node_scores(predictor, g, target_class):
    batch = predictor.batch([g])
    h = predictor.module.embed(batch).detach().requires_grad_(True)
    logits = predictor.module.readout_logits(h, batch)
    grad, = torch.autograd.grad(logits[0, target_class], h)
    alpha = grad.mean(dim=0)
    return torch.relu((h * alpha).sum(dim=1)).detach()


def explain_gradcam(predictor, g, target_class, ratio=0.15):
    node_scores = gradcam_node_scores(predictor, g, target_class).tolist()
    values = [(node_scores[u] + node_scores[v]) / 2.0 for u, v in g.edges]
    return _to_mask(g, values, ratio)


def explain_maskopt(predictor, g, target_class, cfg):
    """ Fit a sigmoid edge mask keeping the target class probable while
    staying sparse. """
    logits_param = torch.zeros(len(g.edges), dtype=predictor.dtype,
                               requires_grad=True)
    optimizer = torch.optim.Adam([logits_param], lr=cfg.maskopt_lr)
    batch = predictor.batch([g])
    for step in range(cfg.maskopt_steps):
        mask = torch.sigmoid(logits_param)
        log_probs = torch.log_softmax(predictor.module(batch, mask), dim=-1)
        loss = -log_probs[0, target_class] + \
            cfg.maskopt_sparsity_coeff * mask.sum()
        if not torch.isfinite(loss):
            raise OptimizationError("mask optimisation for '%s' diverged at "
                                    "step %d" % (g.graph_id, step))
        optimizer.zero_grad()
        grad, = torch.autograd.grad(loss, logits_param)
        logits_param.grad = grad
        optimizer.step()
    values = torch.sigmoid(logits_param).detach().tolist()
    return _to_mask(g, values, cfg.mask_ratio)


def without_edge(g, edge):
    return g.replace(edges=[e for e in g.edges if e != edge],
                     ground_truth_edges=None)


def explain_occlusion(predictor, g, target_class, ratio=0.15):
    """ p_target(g) - p_target(g without e), one forward pass per edge. """
    base = float(predictor.forward(g)[target_class])
    values = [base - float(predictor.forward(without_edge(g, e))
                           [target_class])
              for e in g.edges]
    return _to_mask(g, values, ratio)


def explain_screener(predictor, g, target_class, ratio=0.15):
    """ Greedily grow the explanation one edge at a time.

    Ties keep the lexicographically first edge. The k-th pick scores
    (|E| - k) / |E|; unpicked edges score 0. """
    budget = selection_budget(ratio, len(g.edges))
    chosen = []
    remaining = list(g.edges)
    for _ in range(budget):
        best, best_p = None, None
        for e in remaining:
            candidate = g.replace(edges=chosen + [e], ground_truth_edges=None)
            p = float(predictor.forward(candidate)[target_class])
            if best_p is None or p > best_p:
                best, best_p = e, p
        chosen.append(best)
        remaining.remove(best)
    total = float(len(g.edges))
    rank = dict((e, (total - k) / total) for k, e in enumerate(chosen))
    return _to_mask(g, [rank.get(e, 0.0) for e in g.edges], ratio)


def explain_random(g, seed, ratio=0.15):
    rng = np.random.default_rng(seed)
    return _to_mask(g, rng.random(len(g.edges)).tolist(), ratio)


def explain(predictor, g, target_class, cfg):
    """ Run the explainer named by ``cfg.kind`` on one graph. """
    if not g.edges:
        return graphs.EdgeMask(g.graph_id, {}, [])
    kind = cfg.kind
    if kind == 'sa':
        return explain_sa(predictor, g, target_class, cfg.mask_ratio)
    if kind == 'gradcam':
        return explain_gradcam(predictor, g, target_class, cfg.mask_ratio)
    if kind == 'maskopt':
        return explain_maskopt(predictor, g, target_class, cfg)
    if kind == 'occlusion':
        return explain_occlusion(predictor, g, target_class, cfg.mask_ratio)
    if kind == 'screener':
        return explain_screener(predictor, g, target_class, cfg.mask_ratio)
    if kind == 'random':
        return explain_random(
            g, common.derive_seed(cfg.seed, 'random', g.graph_id),
            cfg.mask_ratio)
    raise UnknownExplainerError("Unknown explainer '%s'" % kind)


def explain_graph(predictor, g, kinds, cfg, target_mode='label'):
    """ All requested explainers on one graph, keyed by kind. """
    target = target_class(predictor, g, target_mode)
    return dict((kind, explain(predictor, g, target, cfg.for_kind(kind)))
                for kind in kinds)


def explain_dataset(predictor, graph_list, kinds, cfg, target_mode='label',
                    pool=None):
    """ Masks keyed by (graph_id, kind) for every graph and explainer. """
    for kind in kinds:
        if kind not in KINDS:
            raise UnknownExplainerError("Unknown explainer '%s'" % kind)
    units = dict((g.graph_id, (explain_graph,
                               (predictor, g, kinds, cfg, target_mode)))
                 for g in graph_list)
    if pool is None:
        results = dict((key, fn(*args)) for key, (fn, args) in units.items())
    else:
        results = pool.map_units(units)
    masks = {}
    for graph_id in sorted(results):
        for kind, mask in results[graph_id].items():
            masks[(graph_id, kind)] = mask
    log.info('Explained %d graphs with %s' % (len(results), ', '.join(kinds)))
    return masks


def select_evaluation_graphs(dataset, predictor, count):
    """ The first ``count`` held-out graphs in graph_id order.

    Falls back to the whole dataset when the predictor held nothing out. """
    held_out = set(predictor.metrics.get('test_ids') or [])
    pool = [g for g in dataset if g.graph_id in held_out] or list(dataset)
    pool.sort(key=lambda g: g.graph_id)
    return pool[:count] if count else pool


def mask_to_record(mask, kind, config=None):
    record = {
        'graph_id': mask.parent_id,
        'explainer': kind,
        'scores': [[u, v, s] for (u, v), s in sorted(mask.scores.items())],
        'selected': sorted([u, v] for u, v in mask.selected),
    }
    if config is not None:
        record['config'] = config
    return record


def mask_from_record(record):
    scores = dict(((int(u), int(v)), float(s))
                  for u, v, s in record['scores'])
    return (record['graph_id'], record['explainer'],
            graphs.EdgeMask(record['graph_id'], scores,
                            [tuple(e) for e in record['selected']]))


def write_masks(masks, path, config=None):
    """ ``masks`` maps (graph_id, kind) to EdgeMask; one JSON line each. """
    with open(path, 'w') as fd:
        for (graph_id, kind) in sorted(masks):
            fd.write(json.dumps(mask_to_record(masks[(graph_id, kind)], kind,
                                               config), sort_keys=True))
            fd.write('\n')
    log.debug('Wrote %d masks to %s' % (len(masks), path))


def read_masks(path):
    masks = {}
    with open(path) as fd:
        for line in fd:
            if line.strip():
                graph_id, kind, mask = mask_from_record(json.loads(line))
                masks[(graph_id, kind)] = mask
    return masks
