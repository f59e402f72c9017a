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

""" Scoring explainers and generators from evaluated records. """

import collections
import json
import logging

import numpy as np

from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import metrics
from dse_bench.task_plugins.explainers import explainers
from dse_bench.task_plugins.frontdoor import estimators


log = logging.getLogger('task_plugins.evalharness.harness')

RANKING_KEYS = ('precision', 'imp_re', 'imp_dse')


class EvaluationReport(object):

    """ Everything a run reports; serialised with sorted keys. """

    def __init__(self, explainers=None, rankings=None, spearman=None,
                 generators=None, ablation=None, sweep=None,
                 removal_gap=None, ratio_curve=None, predictor=None,
                 config=None, seeds=None, metadata=None):
        self.explainers = explainers or {}
        self.rankings = rankings or {}
        self.spearman = spearman or {}
        self.generators = generators or {}
        self.ablation = ablation or {}
        self.sweep = sweep or []
        self.removal_gap = removal_gap or {}
        self.ratio_curve = ratio_curve or []
        self.predictor = predictor or {}
        self.config = config or {}
        self.seeds = seeds or {}
        self.metadata = metadata or {}

    def to_dict(self):
        return dict(
            explainers=self.explainers, rankings=self.rankings,
            spearman=self.spearman, generators=self.generators,
            ablation=self.ablation, sweep=self.sweep,
            removal_gap=self.removal_gap,
            ratio_curve=self.ratio_curve, predictor=self.predictor,
            config=self.config, seeds=self.seeds, metadata=self.metadata)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n'

    def save(self, path):
        with open(path, 'w') as fd:
            fd.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as fd:
            return cls.from_dict(json.load(fd))


def _by_graph(dataset):
    return dict((g.graph_id, g) for g in dataset)


def explainer_lists(dataset, masks, records):
    """ Per explainer: graph ids with aligned precision and importances,
    sorted by graph_id. """
    lookup = _by_graph(dataset)
    lists = collections.defaultdict(lambda: collections.defaultdict(list))
    for record in sorted(records, key=lambda r: r.key):
        g = lookup[record.graph_id]
        mask = masks[record.key]
        entry = lists[record.explainer]
        entry['graph_ids'].append(record.graph_id)
        entry['precision'].append(metrics.precision(mask, g))
        entry['imp_re'].append(record.imp_re)
        entry['imp_dse'].append(record.imp_dse)
        entry['imp_dse_deletion'].append(record.imp_dse_deletion)
    return dict((k, dict(v)) for k, v in lists.items())


def rho_comparison(dataset, masks, records):
    """ Pearson between precision and each importance, per explainer.

    Undefined correlations come back as None with the reason. """
    out = {}
    for kind, lists in sorted(explainer_lists(dataset, masks,
                                              records).items()):
        rho_re, why_re = metrics.correlation_or_reason(
            metrics.pearson, lists['precision'], lists['imp_re'])
        rho_dse, why_dse = metrics.correlation_or_reason(
            metrics.pearson, lists['precision'], lists['imp_dse'])
        out[kind] = dict(rho_re=rho_re, rho_re_reason=why_re,
                         rho_dse=rho_dse, rho_dse_reason=why_dse)
    return out


def explainer_summary(dataset, masks, records):
    lists = explainer_lists(dataset, masks, records)
    rhos = rho_comparison(dataset, masks, records)
    summary = {}
    for kind in sorted(lists):
        entry = dict(lists[kind])
        for key in ('precision', 'imp_re', 'imp_dse', 'imp_dse_deletion'):
            entry['mean_' + key] = float(np.mean(entry[key]))
        entry.update(rhos[kind])
        summary[kind] = entry
    return summary


def explainer_rankings(summary):
    """ Explainers ranked by mean precision, mean imp_re and mean imp_dse,
    plus the Spearman agreement of each importance ranking with the
    precision ranking, computed on the means so that ties share their
    average rank. """
    kinds = sorted(summary)
    rankings = dict((key, metrics.ranking(dict(
        (k, summary[k]['mean_' + key]) for k in kinds)))
        for key in RANKING_KEYS)
    means = dict((key, [summary[k]['mean_' + key] for k in kinds])
                 for key in RANKING_KEYS)
    spearman = {}
    for key, name in (('imp_re', 'spearman_re'), ('imp_dse', 'spearman_dse')):
        value, reason = metrics.correlation_or_reason(
            metrics.spearman, means['precision'], means[key])
        spearman[name] = value
        spearman[name + '_reason'] = reason
    return rankings, spearman


def _target(predictor, g, cfg):
    return explainers.target_class(predictor, g, cfg.target)


def _val_term(predictor, generator, g, cfg):
    mask = graphs.ground_truth_mask(g)
    target = _target(predictor, g, cfg)
    surrogate = estimators.imp_dse_reduced(predictor, generator, g, mask,
                                           target, cfg, stream='val')
    return surrogate - predictor.importance_removal(mask, g, target)


def _map(units, pool):
    if pool is None:
        return dict((key, fn(*args)) for key, (fn, args) in units.items())
    return pool.map_units(units)


def val_metric(dataset, generator, predictor, cfg, pool=None):
    """ Mean gain of the ground-truth surrogate over the raw ground truth. """
    units = dict((g.graph_id, (_val_term, (predictor, generator, g, cfg)))
                 for g in dataset)
    results = _map(units, pool)
    return float(np.mean([results[k] for k in sorted(results)]))


def random_mask(g, ratio, rng):
    scores = dict(zip(g.edges, rng.random(len(g.edges)).tolist()))
    return graphs.top_fraction_mask(scores, ratio, parent_id=g.graph_id)


def _fid_term(predictor, generator, g, cfg, num_random_masks, ratio):
    full = predictor.forward(g)
    gaps = []
    for j in range(num_random_masks):
        rng = np.random.default_rng(
            common.derive_seed(cfg.seed, g.graph_id, 'fid-mask', j))
        mask = random_mask(g, ratio, rng)
        stars, weights = estimators.surrogate_distribution(
            generator, g, mask, cfg, stream='fid/%d' % j)
        expected = np.dot(weights, predictor.predict_many(stars))
        gaps.append(np.mean((full - expected) ** 2))
    return float(np.mean(gaps))


def fid_metric(dataset, generator, predictor, cfg, num_random_masks=1,
               ratio=0.15, pool=None):
    """ Mean squared gap between the full graph's class probabilities and
    the surrogate-averaged ones over random subgraphs. """
    units = dict((g.graph_id, (_fid_term, (predictor, generator, g, cfg,
                                           num_random_masks, ratio)))
                 for g in dataset if g.edges)
    results = _map(units, pool)
    return float(np.mean([results[k] for k in sorted(results)]))


def generator_metrics(dataset, generator, predictor, cfg, num_random_masks,
                      ratio, pool=None):
    return {
        'VAL': val_metric(dataset, generator, predictor, cfg, pool),
        'FID': fid_metric(dataset, generator, predictor, cfg,
                          num_random_masks, ratio, pool),
    }


def ablation_summary(generator_results, seeds,
                     variants=('cvgae', 'no_contrastive', 'no_penalty')):
    """ Mean VAL/FID per variant over matched seeds, and whether the full
    generator's VAL dominates each ablation on every seed. ``runs`` keeps
    the per-seed numbers. """
    out = {}
    runs = []
    for variant in variants:
        for s in seeds:
            name = '%s-s%d' % (variant, s)
            if name in generator_results:
                runs.append(dict(
                    name=name, variant=variant, seed=s,
                    VAL=generator_results[name]['VAL'],
                    FID=generator_results[name]['FID']))
    if runs:
        out['runs'] = runs
    for variant in variants:
        rows = [generator_results.get('%s-s%d' % (variant, s)) for s in seeds]
        rows = [r for r in rows if r is not None]
        if rows:
            out[variant] = dict(
                VAL=float(np.mean([r['VAL'] for r in rows])),
                FID=float(np.mean([r['FID'] for r in rows])),
                seeds=len(rows))
    for variant in variants[1:]:
        pairs = [(generator_results.get('%s-s%d' % (variants[0], s)),
                  generator_results.get('%s-s%d' % (variant, s)))
                 for s in seeds]
        pairs = [(a, b) for a, b in pairs if a and b]
        if pairs:
            out['%s_dominates_%s' % (variants[0], variant)] = all(
                a['VAL'] >= b['VAL'] for a, b in pairs)
    return out


def _removal_terms(predictor, g, cfg):
    target = _target(predictor, g, cfg)
    return (float(predictor.forward(g)[target]),
            predictor.importance_removal(graphs.ground_truth_mask(g), g,
                                         target))


def removal_table(dataset, predictor, cfg, pool=None):
    """ Mean f(G)[y] against mean f(G_s+)[y] on the ground truth. """
    units = dict((g.graph_id, (_removal_terms, (predictor, g, cfg)))
                 for g in dataset)
    results = _map(units, pool)
    full = [results[k][0] for k in sorted(results)]
    removal = [results[k][1] for k in sorted(results)]
    return dict(full_graph=float(np.mean(full)),
                ground_truth_removal=float(np.mean(removal)),
                gap=float(np.mean(full) - np.mean(removal)),
                graphs=len(full))


def ground_truth_ranked_mask(g, ratio):
    """ Ground-truth edges first, then the rest, ties lexicographic. """
    scores = dict((e, 1.0 if e in g.ground_truth_edges else 0.0)
                  for e in g.edges)
    return graphs.top_fraction_mask(scores, ratio, parent_id=g.graph_id)


def _ratio_terms(predictor, generator, g, cfg, ratios):
    target = _target(predictor, g, cfg)
    out = []
    for ratio in ratios:
        mask = ground_truth_ranked_mask(g, ratio)
        out.append((predictor.importance_removal(mask, g, target),
                    estimators.imp_dse_reduced(
                        predictor, generator, g, mask, target, cfg,
                        stream='ratio/%r' % ratio)))
    return out


def ratio_curve(dataset, generator, predictor, cfg, ratios, pool=None):
    units = dict((g.graph_id, (_ratio_terms,
                               (predictor, generator, g, cfg, ratios)))
                 for g in dataset if g.edges)
    results = _map(units, pool)
    keys = sorted(results)
    rows = []
    for i, ratio in enumerate(ratios):
        rows.append(dict(
            ratio=ratio,
            imp_re=float(np.mean([results[k][i][0] for k in keys])),
            imp_dse=float(np.mean([results[k][i][1] for k in keys]))))
    return rows
