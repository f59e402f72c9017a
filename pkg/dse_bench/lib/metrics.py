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


import numpy as np
from scipy import stats

from dse_bench.lib import graphs


class UndefinedCorrelationError(Exception):
    pass


def precision(mask, g):
    """ Fraction of the selected edges inside the ground-truth motif. """
    if g.ground_truth_edges is None:
        raise graphs.GraphError("graph '%s' has no ground truth" % g.graph_id)
    mask.check_parent(g)
    if not mask.selected:
        return 0.0
    return len(mask.selected & g.ground_truth_edges) / \
        float(len(mask.selected))


def _vectors(xs, ys):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise UndefinedCorrelationError('lists must be flat and of equal '
                                        'length (%s vs %s)'
                                        % (xs.shape, ys.shape))
    if len(xs) < 2:
        raise UndefinedCorrelationError('need at least two values, got %d'
                                        % len(xs))
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise UndefinedCorrelationError('constant list has zero variance')
    return xs, ys


def pearson(xs, ys):
    xs, ys = _vectors(xs, ys)
    r = stats.pearsonr(xs, ys)[0]
    return float(np.clip(r, -1.0, 1.0))


def spearman(rank_a, rank_b):
    """ Pearson correlation of the average-rank vectors. """
    rank_a, rank_b = _vectors(rank_a, rank_b)
    return pearson(stats.rankdata(rank_a), stats.rankdata(rank_b))


def ranking(scores):
    """ Keys ordered best first by score, ties by key.

    The order is for display; correlate the scores themselves. """
    return sorted(scores, key=lambda k: (-scores[k], k))


def correlation_or_reason(fn, xs, ys):
    """ (value, None) or (None, reason) for report entries. """
    try:
        return fn(xs, ys), None
    except UndefinedCorrelationError as e:
        return None, str(e)
