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
import os
import sys

from dse_bench import experiment
from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import utils
from dse_bench.task_plugins.cvgae import model
from dse_bench.task_plugins.cvgae import train

# Command line flag -> GeneratorConfig field
FLAGS = (('gamma', 'contrastive_weight'),
         ('omega', 'adversarial_weight'),
         ('lambda', 'penalty_weight'),
         ('tau', 'temperature'),
         ('ratio', 'masking_ratio'),
         ('beta', 'kl_weight'),
         ('epochs', 'max_epochs'),
         ('seed', 'seed'),
         ('variant', 'variant'))


def train_and_save(args):
    options = vars(args)
    section = experiment.config_section(
        args.config, 'generator',
        dict((field, options[flag]) for flag, field in FLAGS))
    for key in ('baselines', 'trained_baselines', 'ablation_seeds'):
        section.pop(key, None)
    cfg = model.GeneratorConfig.from_dict(section)

    result = train.train_generator(graphs.read_dataset(args.data), cfg)
    directory = os.path.dirname(os.path.abspath(args.out))
    utils.ensure_dir(directory)
    result.generator.save(args.out + '.npz')
    result.discriminator.save(args.out + '-discriminator.npz')
    losses = os.path.join(directory, 'losses.csv')
    train.write_losses(result.losses, losses)
    print('Generator written to %s.npz, losses to %s' % (args.out, losses))


def main():
    parser = argparse.ArgumentParser(
        description='Train the conditional surrogate graph generator.')
    parser.add_argument('-c', '--config',
                        help='Path to yaml config file; [generator] is used.')
    parser.add_argument('--data', required=True, help='Dataset file.')
    parser.add_argument('--out', required=True,
                        help='Checkpoint prefix; writes <prefix>.npz and '
                             '<prefix>-discriminator.npz.')
    parser.add_argument('--gamma', type=float,
                        help='Contrastive loss weight.')
    parser.add_argument('--omega', type=float,
                        help='Adversarial loss weight.')
    parser.add_argument('--lambda', type=float,
                        help='Gradient penalty weight.')
    parser.add_argument('--tau', type=float,
                        help='Contrastive temperature.')
    parser.add_argument('--ratio', type=float,
                        help='Fraction of edges removed when breaking '
                             'training graphs.')
    parser.add_argument('--beta', type=float, help='KL weight.')
    parser.add_argument('--epochs', type=int, help='Training epochs.')
    parser.add_argument('--seed', type=int, help='Training seed.')
    parser.add_argument('--variant', choices=model.TRAINED_VARIANTS,
                        help='Generator variant to train.')
    parser.add_argument('--debug-log', help='Write debug logging here.')
    args = parser.parse_args()

    utils.setup_logging(args.debug_log)
    try:
        train_and_save(args)
    except (common.ConfigError, graphs.GraphError,
            train.GeneratorTrainingError) as e:
        sys.exit(str(e))


if __name__ == '__main__':
    main()
