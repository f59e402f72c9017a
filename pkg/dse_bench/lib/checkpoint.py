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

""" Named-parameter archives for predictors, generators and discriminators.

A checkpoint is a numpy ``.npz`` archive. Every parameter is stored as a
float32 array under ``param/<name>``; the member ``__metadata__`` is a
JSON document holding the model kind, the config echo, training metrics and
the expected shape of every parameter. """

import collections
import json
import logging
import os

import numpy as np
import torch


log = logging.getLogger('lib.checkpoint')

METADATA_KEY = '__metadata__'
PARAM_PREFIX = 'param/'


class CheckpointError(Exception):
    pass


class ModelCheckpoint(object):

    def __init__(self, kind, parameters, config=None, metrics=None):
        self.kind = kind
        self.parameters = collections.OrderedDict(
            (name, np.asarray(value, dtype=np.float32))
            for name, value in parameters.items())
        self.config = dict(config or {})
        self.metrics = dict(metrics or {})

    @classmethod
    def from_module(cls, kind, module, config=None, metrics=None):
        params = collections.OrderedDict(
            (name, tensor.detach().cpu().to(torch.float32).numpy().copy())
            for name, tensor in module.state_dict().items())
        return cls(kind, params, config=config, metrics=metrics)

    def load_into(self, module):
        state = collections.OrderedDict(
            (name, torch.from_numpy(value.copy()))
            for name, value in self.parameters.items())
        module.load_state_dict(state)
        return module

    def metadata(self):
        return {
            'kind': self.kind,
            'config': self.config,
            'metrics': self.metrics,
            'shapes': dict((name, list(value.shape))
                           for name, value in self.parameters.items()),
            'order': list(self.parameters),
        }

    def save(self, path):
        directory = os.path.dirname(path)
        if directory and not os.path.isdir(directory):
            os.makedirs(directory)
        arrays = dict((PARAM_PREFIX + name, value)
                      for name, value in self.parameters.items())
        arrays[METADATA_KEY] = np.array(json.dumps(self.metadata(),
                                                   sort_keys=True))
        with open(path, 'wb') as fd:
            np.savez(fd, **arrays)
        log.debug('Saved %s checkpoint with %d tensors to %s'
                  % (self.kind, len(self.parameters), path))

    @classmethod
    def load(cls, path, kind=None):
        if not os.path.isfile(path):
            raise CheckpointError("Checkpoint '%s' not found" % path)
        with np.load(path, allow_pickle=False) as archive:
            if METADATA_KEY not in archive.files:
                raise CheckpointError("'%s' has no metadata block" % path)
            meta = json.loads(str(archive[METADATA_KEY]))
            params = collections.OrderedDict()
            for name in meta['order']:
                value = archive[PARAM_PREFIX + name]
                if list(value.shape) != meta['shapes'][name]:
                    raise CheckpointError(
                        "'%s': tensor %s has shape %s, metadata says %s"
                        % (path, name, list(value.shape),
                           meta['shapes'][name]))
                params[name] = value
        if kind is not None and meta['kind'] != kind:
            raise CheckpointError("'%s' holds a %s checkpoint, wanted %s"
                                  % (path, meta['kind'], kind))
        return cls(meta['kind'], params, config=meta['config'],
                   metrics=meta['metrics'])
