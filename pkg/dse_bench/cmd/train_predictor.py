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
from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import utils
from dse_bench.task_plugins.predictor import model


def main():
    parser = argparse.ArgumentParser(
        description='Train the graph classifier on a dataset.')
    parser.add_argument('-c', '--config',
                        help='Path to yaml config file; [predictor] is used.')
    parser.add_argument('--data', required=True, help='Dataset file.')
    parser.add_argument('--out', required=True,
                        help='Predictor checkpoint to write.')
    parser.add_argument('--epochs', type=int, help='Training epochs.')
    parser.add_argument('--seed', type=int, help='Training seed.')
    parser.add_argument('--debug-log', help='Write debug logging here.')
    args = parser.parse_args()

    utils.setup_logging(args.debug_log)
    try:
        cfg = model.PredictorConfig.from_dict(experiment.config_section(
            args.config, 'predictor',
            {'max_epochs': args.epochs, 'seed': args.seed}))
        predictor = model.train(graphs.read_dataset(args.data), cfg)
    except (common.ConfigError, graphs.GraphError, model.TrainingError) as e:
        sys.exit(str(e))
    predictor.save(args.out)
    print('Test accuracy %.4f, written to %s'
          % (predictor.metrics['test_accuracy'], args.out))


if __name__ == '__main__':
    main()
