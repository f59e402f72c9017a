#!/usr/bin/python3
#
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


import argparse
import sys

from dse_bench import experiment
from dse_bench import worker_manager
from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import utils
from dse_bench.task_plugins.explainers import explainers
from dse_bench.task_plugins.predictor import model


def explain(args):
    section = experiment.config_section(args.config, 'explainers',
                                        {'mask_ratio': args.ratio})
    kinds = section.pop('kinds', explainers.KINDS)
    if args.explainer:
        kinds = [k.strip() for k in args.explainer.split(',') if k.strip()]
    count = section.pop('evaluation_graphs', 200)
    if args.graphs is not None:
        count = args.graphs
    cfg = explainers.ExplainerConfig.from_dict(section)

    predictor = model.Predictor.load(args.ckpt)
    selected = explainers.select_evaluation_graphs(
        graphs.read_dataset(args.data), predictor, int(count))
    masks = explainers.explain_dataset(
        predictor, selected, list(kinds), cfg, args.target,
        pool=worker_manager.WorkerPool(args.workers))
    config = cfg.to_dict()
    config.pop('kind')
    explainers.write_masks(masks, args.out, config)
    print('Wrote %d masks to %s' % (len(masks), args.out))


def main():
    parser = argparse.ArgumentParser(
        description='Explain predictor decisions with edge masks.')
    parser.add_argument('-c', '--config',
                        help='Path to yaml config file; [explainers] is '
                             'used.')
    parser.add_argument('--data', required=True, help='Dataset file.')
    parser.add_argument('--ckpt', required=True,
                        help='Predictor checkpoint.')
    parser.add_argument('--explainer',
                        help='Comma separated explainers, e.g. sa,gradcam.')
    parser.add_argument('--ratio', type=float,
                        help='Fraction of edges each mask selects.')
    parser.add_argument('--graphs', type=int,
                        help='Number of held-out graphs to explain.')
    parser.add_argument('--target', default='label',
                        choices=explainers.TARGET_MODES,
                        help='Class each explanation is for.')
    parser.add_argument('--out', required=True, help='Masks jsonl to write.')
    parser.add_argument('--workers', type=int, default=1,
                        help='Concurrent explanation threads.')
    parser.add_argument('--debug-log', help='Write debug logging here.')
    args = parser.parse_args()

    utils.setup_logging(args.debug_log)
    try:
        explain(args)
    except (common.ConfigError, explainers.UnknownExplainerError,
            explainers.OptimizationError) as e:
        sys.exit(str(e))


if __name__ == '__main__':
    main()
