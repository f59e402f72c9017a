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
import signal
import sys
import time

import daemon
import extras

from dse_bench import experiment

# as of python-daemon 1.6 it doesn't bundle pidlockfile anymore
# instead it depends on lockfile-0.9.1 which uses pidfile.
PID_FILE_MODULE = extras.try_imports(['daemon.pidlockfile', 'daemon.pidfile'])


def run_report(args):
    config = experiment.load_config(args.config)
    if args.fresh:
        config['resume'] = False

    server = experiment.Experiment(config)

    def term_handler(signum, frame):
        server.shutdown()
    signal.signal(signal.SIGTERM, term_handler)

    def hup_handler(signum, frame):
        server.shutdown_gracefully()
    signal.signal(signal.SIGHUP, hup_handler)

    if args.background:
        server.daemon = True
    server.start()

    while not server.stopped():
        try:
            time.sleep(1)
        except KeyboardInterrupt:
            print("Ctrl + C: asking stages to exit nicely...\n")
            server.shutdown()
    server.join()

    if server.error is not None:
        sys.exit('Run failed: %s' % server.error)
    print('Report written to %s' % server.path('report.json'))


def main():
    parser = argparse.ArgumentParser(
        description='Run the whole pipeline and write the report.')
    parser.add_argument('-c', '--config', required=True,
                        help='Path to yaml config file.')
    parser.add_argument('--fresh', action='store_true',
                        help='Rerun every stage instead of resuming.')
    parser.add_argument('-b', '--background', action='store_true',
                        help='Run as a daemon in the background.')
    parser.add_argument('-p', '--pidfile',
                        default='/var/run/dse-bench/dse-bench-report.pid',
                        help='PID file to lock during daemonization.')
    args = parser.parse_args()
    if args.background:
        pidfile = PID_FILE_MODULE.TimeoutPIDLockFile(args.pidfile, 10)
        with daemon.DaemonContext(pidfile=pidfile):
            run_report(args)
    else:
        run_report(args)


if __name__ == '__main__':
    main()
