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


import functools
import hashlib
import inspect


# Run directory layout
DATASET = 'data/tr3.txt'
DATA_MANIFEST = 'data/manifest.json'
PREDICTOR = 'predictor.npz'
MASKS = 'masks.jsonl'
GENERATOR = 'generator.npz'
DISCRIMINATOR = 'discriminator.npz'
LOSSES = 'losses.csv'
GENERATOR_DIR = 'generators'
GENERATOR_INDEX = 'generators/index.json'
RECORDS = 'records.jsonl'
REPORT = 'report.json'
MANIFEST = 'manifest.json'
EXPLAINER_TABLE = 'table2.csv'
GENERATOR_TABLE = 'table4.csv'
CORRELATION_PLOT = 'fig2.svg'


class ConfigError(Exception):
    pass


class MissingArtifactError(Exception):
    def __init__(self, path, hint=None):
        message = "Required artifact '%s' does not exist" % path
        if hint:
            message += '; %s' % hint
        super(MissingArtifactError, self).__init__(message)
        self.path = path


def task_step(fn):
    """Decorator for the next step in a task."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        args[0]._do_next_step()
        result = fn(*args, **kwargs)
        return result
    return wrapper


def derive_seed(base_seed, *keys):
    """ A 63-bit seed derived from a base seed and any hashable keys.

    Independent of thread scheduling and of Python's hash randomisation. """
    digest = hashlib.sha256(repr((int(base_seed),) + keys).encode('utf-8'))
    return int.from_bytes(digest.digest()[:8], 'big') & ((1 << 63) - 1)


def config_from_dict(cls, section, section_name):
    """ Build a config object from a YAML section, rejecting unknown keys. """
    section = dict(section or {})
    params = inspect.signature(cls.__init__).parameters
    unknown = sorted(set(section) - set(params) - set(['self']))
    if unknown:
        raise ConfigError('Unknown key(s) in [%s]: %s'
                          % (section_name, ', '.join(unknown)))
    try:
        return cls(**section)
    except (TypeError, ValueError) as e:
        raise ConfigError('Bad value in [%s]: %s' % (section_name, e))
