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
from dse_bench import worker_manager
from dse_bench.lib import common
from dse_bench.lib import graphs
from dse_bench.lib import tr3
from dse_bench.lib import utils
from dse_bench.task_plugins.tr3gen import task


def generate(args):
    section = experiment.config_section(args.config, 'data', {
        'num_graphs': args.num, 'seed': args.seed})
    section.pop('path', None)
    cfg = tr3.Tr3Config.from_dict(section)
    pool = worker_manager.WorkerPool(args.workers)
    dataset = tr3.generate_dataset(cfg, pool=pool)

    directory = os.path.dirname(os.path.abspath(args.out))
    utils.ensure_dir(directory)
    graphs.write_dataset(dataset, args.out)
    manifest = task.write_dataset_manifest(
        dataset, cfg, args.out, os.path.join(directory, 'manifest.json'))
    print('Wrote %d graphs to %s (class counts %s)'
          % (len(dataset), args.out, manifest['class_counts']))


def main():
    parser = argparse.ArgumentParser(
        description='Generate the TR3 motif dataset.')
    parser.add_argument('-c', '--config',
                        help='Path to yaml config file; [data] is used.')
    parser.add_argument('--out', required=True,
                        help='Dataset file to write. manifest.json goes '
                             'next to it.')
    parser.add_argument('--num', type=int, help='Number of graphs.')
    parser.add_argument('--seed', type=int, help='Generation seed.')
    parser.add_argument('--workers', type=int, default=1,
                        help='Concurrent generation threads.')
    parser.add_argument('--debug-log', help='Write debug logging here.')
    args = parser.parse_args()

    utils.setup_logging(args.debug_log)
    try:
        generate(args)
    except (common.ConfigError, tr3.UnknownMotifError) as e:
        sys.exit(str(e))


if __name__ == '__main__':
    main()
