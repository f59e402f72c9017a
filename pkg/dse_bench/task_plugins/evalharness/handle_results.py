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


""" Methods to handle the results of an evaluation.

Write the report, its tables and figure into the run directory, index them
and optionally publish the lot somewhere useful. """

import csv
import json
import os

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa

from dse_bench.lib import common  # noqa
from dse_bench.lib import utils  # noqa


EXPLAINER_COLUMNS = ('explainer', 'mean_precision', 'mean_imp_re',
                  'mean_imp_dse', 'rho_re', 'rho_dse', 'rank_precision',
                  'rank_imp_re', 'rank_imp_dse')
REMOVAL_COLUMNS = ('full_graph', 'ground_truth_removal', 'gap', 'graphs')
GENERATOR_COLUMNS = ('generator', 'VAL', 'FID')
SWEEP_COLUMNS = ('lambda', 'gamma', 'VAL', 'FID')
RATIO_COLUMNS = ('ratio', 'imp_re', 'imp_dse')


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, columns, rows):
    with open(path, 'w') as fd:
        writer = csv.writer(fd, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def explainer_rows(report):
    rows = []
    for kind in sorted(report.explainers):
        entry = report.explainers[kind]
        row = dict(explainer=kind)
        for key in ('mean_precision', 'mean_imp_re', 'mean_imp_dse',
                    'rho_re', 'rho_dse'):
            row[key] = entry.get(key)
        for key in ('precision', 'imp_re', 'imp_dse'):
            order = report.rankings.get(key, [])
            row['rank_' + key] = order.index(kind) + 1 if kind in order \
                else None
        rows.append(row)
    rows.append(dict(explainer='spearman_vs_precision',
                     rank_imp_re=report.spearman.get('spearman_re'),
                     rank_imp_dse=report.spearman.get('spearman_dse')))
    return rows


def generator_rows(report):
    return [dict(generator=name, VAL=values['VAL'], FID=values['FID'])
            for name, values in sorted(report.generators.items())]


def ablation_rows(report):
    return [dict(generator=name, VAL=values['VAL'], FID=values['FID'])
            for name, values in sorted(report.ablation.items())
            if isinstance(values, dict)]


def plot_correlations(report, path):
    """ Grouped bars of rho_re against rho_dse per explainer. """
    kinds = sorted(report.explainers)
    re_values = [report.explainers[k].get('rho_re') or 0.0 for k in kinds]
    dse_values = [report.explainers[k].get('rho_dse') or 0.0 for k in kinds]
    positions = list(range(len(kinds)))
    width = 0.38

    plt.rcParams['svg.hashsalt'] = 'dse-bench'
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar([p - width / 2 for p in positions], re_values, width,
           label='removal', color='#9e9e9e')
    ax.bar([p + width / 2 for p in positions], dse_values, width,
           label='DSE', color='#1f77b4')
    ax.set_xticks(positions)
    ax.set_xticklabels(kinds)
    ax.set_ylabel('correlation with precision')
    ax.axhline(0.0, color='black', linewidth=0.8)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)


def generate_log_index(datasets):
    """ Create an index of result files and links to them """
    output = '<html><head><title>Index of results</title></head><body>'
    output += '<ul>'
    for dataset in datasets:
        output += '<li>'
        output += '<a href="%s">%s</a>' % (dataset['result_uri'],
                                           dataset['name'])
        output += ' <span class="%s">%s</span>' % (dataset['result'],
                                                   dataset['result'])
        output += '</li>'

    output += '</ul>'
    output += '</body></html>'
    return output


def make_index_file(run_dir, index_filename='index.html'):
    """ Writes an index of every file under the run dir """
    datasets = []
    for path, folders, files in sorted(os.walk(run_dir)):
        folders.sort()
        for name in sorted(files):
            if name == index_filename:
                continue
            rel = os.path.relpath(os.path.join(path, name), run_dir)
            datasets.append(dict(name=rel, result_uri=rel, result='SUCCESS'))
    index_path = os.path.join(run_dir, index_filename)
    with open(index_path, 'w') as fd:
        fd.write(generate_log_index(datasets))
    return index_path


def write_manifest(run_dir, inputs, path):
    """ Git blob hashes of inputs and produced artifacts plus the code
    revision. """
    manifest = dict(inputs={}, artifacts={},
                    code_revision=utils.code_revision())
    for name, input_path in sorted(inputs.items()):
        if input_path and os.path.isfile(input_path):
            manifest['inputs'][name] = utils.git_blob_hash(input_path)
    for folder, folders, files in os.walk(run_dir):
        folders.sort()
        for name in files:
            full = os.path.join(folder, name)
            rel = os.path.relpath(full, run_dir)
            if full == path or rel.startswith('status' + os.sep) or \
                    name.endswith('.log'):
                continue
            manifest['artifacts'][rel] = utils.git_blob_hash(full)
    with open(path, 'w') as fd:
        json.dump(manifest, fd, indent=2, sort_keys=True)
        fd.write('\n')
    return manifest


def write_results(report, run_dir):
    """ report.json, CSV tables and the correlation figure. """
    report.save(os.path.join(run_dir, 'report.json'))
    write_csv(os.path.join(run_dir, common.EXPLAINER_TABLE),
              EXPLAINER_COLUMNS, explainer_rows(report))
    if report.removal_gap:
        write_csv(os.path.join(run_dir, 'removal_gap.csv'),
                  REMOVAL_COLUMNS, [report.removal_gap])
    write_csv(os.path.join(run_dir, common.GENERATOR_TABLE),
              GENERATOR_COLUMNS, generator_rows(report))
    if report.ablation:
        write_csv(os.path.join(run_dir, 'ablation.csv'), GENERATOR_COLUMNS,
                  ablation_rows(report))
    if report.sweep:
        write_csv(os.path.join(run_dir, 'sweep.csv'), SWEEP_COLUMNS,
                  report.sweep)
    if report.ratio_curve:
        write_csv(os.path.join(run_dir, 'ratio_curve.csv'), RATIO_COLUMNS,
                  report.ratio_curve)
    plot_correlations(report,
                      os.path.join(run_dir, common.CORRELATION_PLOT))


def generate_push_results(run_dir, results_set_name, publish_config):
    """ Index the run and push it out """
    make_index_file(run_dir)
    return utils.push_file(results_set_name, run_dir, publish_config)
