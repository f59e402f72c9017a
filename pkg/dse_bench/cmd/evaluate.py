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
from dse_bench.task_plugins.cvgae import generators
from dse_bench.task_plugins.explainers import explainers
from dse_bench.task_plugins.frontdoor import estimators
from dse_bench.task_plugins.predictor import model


def evaluate(args):
    cfg = estimators.DseConfig.from_dict(experiment.config_section(
        args.config, 'dse', {'num_surrogates': args.n,
                             'estimator': args.estimator,
                             'seed': args.seed}))
    records = estimators.evaluate_all(
        graphs.read_dataset(args.data), explainers.read_masks(args.masks),
        model.Predictor.load(args.predictor),
        generators.load_generator(args.generator), cfg,
        pool=worker_manager.WorkerPool(args.workers))
    estimators.write_records(records, args.out)
    print('Wrote %d importance records to %s' % (len(records), args.out))


def main():
    parser = argparse.ArgumentParser(
        description='Estimate removal and surrogate importance of masks.')
    parser.add_argument('-c', '--config',
                        help='Path to yaml config file; [dse] is used.')
    parser.add_argument('--data', required=True, help='Dataset file.')
    parser.add_argument('--masks', required=True, help='Masks jsonl.')
    parser.add_argument('--predictor', required=True,
                        help='Predictor checkpoint.')
    parser.add_argument('--generator', required=True,
                        help='Generator checkpoint.')
    parser.add_argument('--n', type=int, help='Surrogates per mask.')
    parser.add_argument('--estimator', choices=estimators.ESTIMATORS,
                        help='Importance estimator.')
    parser.add_argument('--seed', type=int, help='Sampling seed.')
    parser.add_argument('--out', required=True,
                        help='Importance records jsonl to write.')
    parser.add_argument('--workers', type=int, default=1,
                        help='Concurrent evaluation threads.')
    parser.add_argument('--debug-log', help='Write debug logging here.')
    args = parser.parse_args()

    utils.setup_logging(args.debug_log)
    try:
        evaluate(args)
    except (common.ConfigError, graphs.GraphError,
            estimators.DegenerateWeightsError) as e:
        sys.exit(str(e))


if __name__ == '__main__':
    main()
