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

""" Objectives of adversarial generator training. """

import torch
import torch.nn.functional as F


def kl_per_node(mu, log_sigma):
    """ KL(N(mu, sigma^2) || N(0, I)) summed over latent dimensions. """
    return 0.5 * (mu.pow(2) + torch.exp(2.0 * log_sigma) - 1.0 -
                  2.0 * log_sigma).sum(dim=-1)


def kl_divergence(mu, log_sigma, node_graph, num_graphs):
    """ Mean over each graph's nodes, then over graphs. """
    per_node = kl_per_node(mu, log_sigma)
    sums = torch.zeros(num_graphs, dtype=per_node.dtype).index_add(
        0, node_graph, per_node)
    counts = torch.zeros(num_graphs, dtype=per_node.dtype).index_add(
        0, node_graph, torch.ones_like(per_node))
    return (sums / counts).mean()


def reconstruction_loss(logits, targets, free, pair_graph, num_graphs):
    """ BCE over the free (non-conditioning) pairs.

    Averaged within each graph, then over graphs; a graph with no free
    pair contributes zero. """
    bce = F.binary_cross_entropy_with_logits(logits, targets,
                                             reduction='none')
    free = free.to(bce.dtype)
    sums = torch.zeros(num_graphs, dtype=bce.dtype).index_add(
        0, pair_graph, bce * free)
    counts = torch.zeros(num_graphs, dtype=bce.dtype).index_add(
        0, pair_graph, free)
    per_graph = torch.where(counts > 0, sums / counts.clamp(min=1.0),
                            torch.zeros_like(sums))
    return per_graph.mean()


def loss_vae(reconstruction, kl, kl_weight):
    return reconstruction + kl_weight * kl


def graph_embeddings(z, node_graph, num_graphs):
    """ Mean latent row per graph. """
    sums = torch.zeros((num_graphs, z.shape[-1]), dtype=z.dtype).index_add(
        0, node_graph, z)
    counts = torch.zeros(num_graphs, dtype=z.dtype).index_add(
        0, node_graph, torch.ones(z.shape[0], dtype=z.dtype))
    return sums / counts.unsqueeze(-1)


def loss_contrastive(embeddings, labels, temperature, similarity='dot'):
    """ Supervised InfoNCE over a batch of graph embeddings.

    For graph i, positives are the other graphs of its class and the
    denominator runs over every other graph. Graphs without a positive are
    left out; a batch with none at all scores zero. Similarity is the
    inner product over ``temperature``; ``cosine`` normalises rows first. """
    if similarity == 'cosine':
        embeddings = F.normalize(embeddings, dim=-1)
    sims = embeddings @ embeddings.t() / temperature
    n = sims.shape[0]
    eye = torch.eye(n, dtype=torch.bool)
    others = ~eye
    positives = (labels.unsqueeze(0) == labels.unsqueeze(1)) & others
    anchors = positives.any(dim=1)
    if not bool(anchors.any()):
        return sims.sum() * 0.0

    neg_inf = torch.finfo(sims.dtype).min
    log_num = torch.logsumexp(sims.masked_fill(~positives, neg_inf), dim=1)
    log_den = torch.logsumexp(sims.masked_fill(~others, neg_inf), dim=1)
    return -(log_num - log_den)[anchors].mean()


def gradient_penalty(discriminator, batch, real_weight, fake_weight,
                     eps=None):
    """ (||grad_w d(w_hat)||_2 - 1)^2 per graph, w_hat interpolating real
    and generated pair weights. ``eps`` holds one coefficient per graph. """
    pair_graph = batch.edge_graph()
    if eps is None:
        eps = torch.rand(batch.num_graphs, dtype=real_weight.dtype)
    e = eps[pair_graph]
    interpolated = (e * real_weight + (1.0 - e) * fake_weight).detach()
    interpolated.requires_grad_(True)
    scores = discriminator(batch, interpolated)
    grad, = torch.autograd.grad(scores.sum(), interpolated,
                                create_graph=True)
    sq = torch.zeros(batch.num_graphs, dtype=grad.dtype).index_add(
        0, pair_graph, grad.pow(2))
    return (torch.sqrt(sq + 1e-12) - 1.0).pow(2)


def loss_discriminator(real_scores, fake_scores, penalty=None,
                       penalty_weight=0.0):
    """ E[d(G, y) - d(G*, y) - lambda * gp]; the critic maximises it. """
    value = real_scores - fake_scores
    if penalty is not None and penalty_weight:
        value = value - penalty_weight * penalty
    return value.mean()
