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


import logging
import queue
import threading
import time


class PoolStopped(Exception):
    pass


class Worker(threading.Thread):

    """ Pulls (key, fn, args) work units off the shared queue until told to
    stop or the queue runs dry. """

    log = logging.getLogger("worker_manager.Worker")

    def __init__(self, pool, name):
        super(Worker, self).__init__(name=name)
        self.daemon = True
        self.pool = pool
        self.running = False

    def run(self):
        self.running = True
        while not self.pool.halted():
            try:
                key, fn, args = self.pool.units.get_nowait()
            except queue.Empty:
                break
            try:
                self.pool.record(key, fn(*args))
            except Exception as e:
                self.log.exception('Work unit %r failed.' % (key,))
                self.pool.record_failure(key, e)
        self.running = False
        self.log.debug("Finished worker thread %s" % self.name)


class WorkerPool(object):

    """ Runs independent per-graph work units on a few threads.

    Results are returned keyed by unit, so callers merge them in sorted key
    order no matter which thread finished first. With one worker the units
    run inline in the calling thread. """

    log = logging.getLogger("worker_manager.WorkerPool")

    def __init__(self, workers=1):
        self.workers = max(1, int(workers))
        self._stop = threading.Event()
        self._lock = threading.Lock()
        self.stopping = False
        self.running = False
        self.units = None
        self.results = {}
        self.failures = {}

    def stop(self):
        self.log.debug("Asking workers to stop")
        self._stop.set()

    def stop_gracefully(self):
        """ Hand out no further units and wait for running ones. """
        self.stopping = True
        while self.running:
            self.log.debug("waiting to finish")
            time.sleep(0.1)
        self._stop.set()

    def stopped(self):
        return self._stop.is_set()

    def halted(self):
        """ True once workers should stop pulling units. """
        return self.stopped() or self.stopping or bool(self.failures)

    def record(self, key, result):
        with self._lock:
            self.results[key] = result

    def record_failure(self, key, error):
        with self._lock:
            self.failures[key] = error

    def map_units(self, units):
        """ Run ``{key: (fn, args)}`` and return ``{key: result}``. """
        self.results = {}
        self.failures = {}
        keys = sorted(units)
        if self.workers == 1:
            self.running = True
            try:
                for key in keys:
                    if self.halted():
                        raise PoolStopped('Worker pool stopped')
                    fn, args = units[key]
                    self.results[key] = fn(*args)
            finally:
                self.running = False
            return dict(self.results)

        self.units = queue.Queue()
        for key in keys:
            fn, args = units[key]
            self.units.put((key, fn, args))
        threads = [Worker(self, 'worker-%d' % i)
                   for i in range(min(self.workers, len(keys)))]
        self.log.debug('Dispatching %d units to %d workers'
                       % (len(keys), len(threads)))
        self.running = True
        try:
            for thread in threads:
                thread.start()
            for thread in threads:
                thread.join()
        finally:
            self.running = False

        if self.failures:
            key = sorted(self.failures)[0]
            raise self.failures[key]
        if len(self.results) != len(keys):
            raise PoolStopped('Worker pool stopped with %d of %d units done'
                              % (len(self.results), len(keys)))
        return dict(self.results)
