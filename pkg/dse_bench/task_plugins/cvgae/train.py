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

""" Adversarial training of the surrogate generator.

Each step masks a random fraction of every real graph's edges, lets the
critic compare real graphs with the generator's completions of the broken
ones, then updates the generator on L_VAE + gamma L_C + omega L_D. """

import collections
import csv
import logging
import math

import numpy as np
import torch

from dse_bench.lib import batching
from dse_bench.lib import checkpoint
from dse_bench.lib import common
from dse_bench.task_plugins.cvgae import losses
from dse_bench.task_plugins.cvgae import model


log = logging.getLogger('task_plugins.cvgae.train')

LOSS_COLUMNS = ('epoch', 'L_VAE', 'L_C', 'L_D', 'total')


class GeneratorTrainingError(Exception):
    def __init__(self, message, epoch, step):
        super(GeneratorTrainingError, self).__init__(
            '%s (epoch %d, step %d)' % (message, epoch, step))
        self.epoch = epoch
        self.step = step


TrainingResult = collections.namedtuple(
    'TrainingResult', ['generator', 'discriminator', 'losses'])


def break_graph(g, ratio, rng):
    """ Kept edges after removing round(ratio * |E|) of them at random. """
    drop = int(math.floor(ratio * len(g.edges) + 0.5))
    if not drop:
        return list(g.edges)
    removed = set(rng.choice(len(g.edges), size=drop, replace=False).tolist())
    return [e for i, e in enumerate(g.edges) if i not in removed]


class PairTargets(object):

    """ Adjacency and conditioning indicators over all pairs of a batch. """

    def __init__(self, graph_list, kept_lists, dtype=torch.float32):
        adjacency, forced = [], []
        for g, kept in zip(graph_list, kept_lists):
            kept = set(kept)
            for pair in batching.all_pairs(g.node_count):
                adjacency.append(1.0 if pair in g.edge_set else 0.0)
                forced.append(pair in kept)
        self.adjacency = torch.tensor(adjacency, dtype=dtype)
        self.forced = torch.tensor(forced, dtype=torch.bool)
        self.free = ~self.forced


def _check(value, name, epoch, step):
    if not torch.isfinite(value):
        raise GeneratorTrainingError('%s is %s' % (name, value.item()),
                                     epoch, step)


class AdversarialTrainer(object):

    log = logging.getLogger('task_plugins.cvgae.train.AdversarialTrainer')

    def __init__(self, dataset, cfg, num_classes=None):
        if not dataset:
            raise GeneratorTrainingError('empty dataset', 0, 0)
        self.dataset = list(dataset)
        self.cfg = cfg
        self.num_classes = num_classes or \
            max(g.label for g in self.dataset) + 1
        self.feature_dim = self.dataset[0].feature_dim

        torch.manual_seed(common.derive_seed(cfg.seed, 'generator-init'))
        self.generator = model.CVGAE(self.feature_dim, cfg)
        self.discriminator = model.Discriminator(
            self.feature_dim, self.num_classes, cfg.discriminator_hidden,
            cfg.num_layers)
        self.g_optimizer = torch.optim.Adam(self.generator.parameters(),
                                            lr=cfg.learning_rate)
        self.d_optimizer = torch.optim.Adam(self.discriminator.parameters(),
                                            lr=cfg.learning_rate)
        self.rng = np.random.default_rng(
            common.derive_seed(cfg.seed, 'generator-train'))
        self.losses = []

    def _prepare(self, chunk):
        kept = [break_graph(g, self.cfg.masking_ratio, self.rng)
                for g in chunk]
        full = batching.GraphBatch.from_graphs(chunk)
        sub = batching.GraphBatch.from_graphs(chunk, edge_lists=kept)
        complete = self.discriminator.condition(chunk)
        targets = PairTargets(chunk, kept)
        eps_z = torch.from_numpy(self.rng.standard_normal(
            (full.num_nodes, 2 * self.cfg.encode_dim))).to(torch.float32)
        eps_gp = torch.from_numpy(self.rng.random(len(chunk))).to(
            torch.float32)
        return full, sub, complete, targets, eps_z, eps_gp

    def _generated_weights(self, code, complete, targets):
        u, v = complete.edge_index
        logits = self.generator.pair_logits(code.z, u, v)
        probs = torch.sigmoid(logits)
        return logits, torch.where(targets.forced, torch.ones_like(probs),
                                   probs)

    def critic_step(self, full, sub, complete, targets, eps_z, eps_gp,
                    epoch, step):
        with torch.no_grad():
            code = self.generator(full, sub, eps_z)
            _, fake = self._generated_weights(code, complete, targets)
        real_scores = self.discriminator(complete, targets.adjacency)
        fake_scores = self.discriminator(complete, fake)
        penalty = None
        if self.cfg.penalty_weight:
            penalty = losses.gradient_penalty(
                self.discriminator, complete, targets.adjacency, fake, eps_gp)
        l_d = losses.loss_discriminator(real_scores, fake_scores, penalty,
                                        self.cfg.penalty_weight)
        _check(l_d, 'L_D', epoch, step)
        self.d_optimizer.zero_grad()
        (-l_d).backward()
        self.d_optimizer.step()
        return l_d.item()

    def generator_step(self, full, sub, complete, targets, eps_z, epoch,
                       step):
        cfg = self.cfg
        code = self.generator(full, sub, eps_z)
        logits, fake = self._generated_weights(code, complete, targets)

        recon = losses.reconstruction_loss(
            logits, targets.adjacency, targets.free, complete.edge_graph(),
            full.num_graphs)
        kl = losses.kl_divergence(code.mu, code.log_sigma, full.batch,
                                  full.num_graphs)
        l_vae = losses.loss_vae(recon, kl, cfg.kl_weight)
        _check(l_vae, 'L_VAE', epoch, step)
        total = l_vae

        l_c = torch.zeros((), dtype=l_vae.dtype)
        if cfg.contrastive_weight and cfg.conditional:
            l_c = losses.loss_contrastive(
                losses.graph_embeddings(code.z, full.batch, full.num_graphs),
                full.labels, cfg.temperature, cfg.similarity)
            _check(l_c, 'L_C', epoch, step)
            total = total + cfg.contrastive_weight * l_c

        if cfg.adversarial and cfg.adversarial_weight:
            with torch.no_grad():
                real_scores = self.discriminator(complete, targets.adjacency)
            fake_scores = self.discriminator(complete, fake)
            l_adv = losses.loss_discriminator(real_scores, fake_scores)
            _check(l_adv, 'L_D', epoch, step)
            total = total + cfg.adversarial_weight * l_adv

        _check(total, 'generator objective', epoch, step)
        self.g_optimizer.zero_grad()
        total.backward()
        self.g_optimizer.step()
        return l_vae.item(), l_c.item(), total.item()

    def run_epoch(self, epoch):
        order = self.rng.permutation(len(self.dataset))
        sums = dict((k, 0.0) for k in LOSS_COLUMNS[1:])
        steps = 0
        for start in range(0, len(order), self.cfg.batch_size):
            chunk = [self.dataset[i]
                     for i in order[start:start + self.cfg.batch_size]]
            steps += 1
            prepared = self._prepare(chunk)
            l_d = 0.0
            if self.cfg.adversarial:
                l_d = self.critic_step(*prepared, epoch=epoch, step=steps)
            l_vae, l_c, total = self.generator_step(
                *prepared[:5], epoch=epoch, step=steps)
            sums['L_VAE'] += l_vae
            sums['L_C'] += l_c
            sums['L_D'] += l_d
            sums['total'] += total
        row = dict((k, v / steps) for k, v in sums.items())
        row['epoch'] = epoch
        return row

    def train(self):
        cfg = self.cfg
        self.log.info('Training %s generator on %d graphs for up to %d '
                      'epochs' % (cfg.variant, len(self.dataset),
                                  cfg.max_epochs))
        previous = None
        for epoch in range(1, cfg.max_epochs + 1):
            self.generator.train()
            self.discriminator.train()
            row = self.run_epoch(epoch)
            self.losses.append(row)
            self.log.info('Epoch %d: L_VAE %.5f L_C %.5f L_D %.5f total %.5f'
                          % (epoch, row['L_VAE'], row['L_C'], row['L_D'],
                             row['total']))
            if cfg.convergence_tol and previous is not None and \
                    abs(row['total'] - previous) < cfg.convergence_tol:
                self.log.info('Objective converged after %d epochs' % epoch)
                break
            previous = row['total']
        self.generator.eval()
        self.discriminator.eval()
        return self.result()

    def result(self):
        config = self.cfg.to_dict()
        config['feature_dim'] = self.feature_dim
        config['num_classes'] = self.num_classes
        metrics = {'epochs': len(self.losses)}
        if self.losses:
            metrics['final'] = self.losses[-1]
        gen = checkpoint.ModelCheckpoint.from_module(
            model.GENERATOR_KIND, self.generator, config=config,
            metrics=metrics)
        disc = checkpoint.ModelCheckpoint.from_module(
            model.DISCRIMINATOR_KIND, self.discriminator, config=config,
            metrics=metrics)
        return TrainingResult(gen, disc, list(self.losses))


def train_generator(dataset, cfg, num_classes=None):
    """ Returns (generator checkpoint, discriminator checkpoint, losses). """
    return AdversarialTrainer(dataset, cfg, num_classes).train()


def write_losses(rows, path):
    with open(path, 'w') as fd:
        writer = csv.writer(fd, lineterminator='\n')
        writer.writerow(LOSS_COLUMNS)
        for row in rows:
            writer.writerow([row['epoch']] +
                            [repr(float(row[k])) for k in LOSS_COLUMNS[1:]])


def read_losses(path):
    with open(path) as fd:
        rows = []
        for record in csv.DictReader(fd):
            row = dict((k, float(record[k])) for k in LOSS_COLUMNS[1:])
            row['epoch'] = int(record['epoch'])
            rows.append(row)
    return rows
