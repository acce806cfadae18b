"""Reward-driven single-user beam search over the pruned tree.

Each round enumerates every subset of the remaining layers (the bottom
layer is always active), scores it by the weighted probe cost of resolving
each candidate bottom beam, probes the candidates of the winner's earliest
layer, and folds the feedback into the tree before re-planning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .beamtree import (
    BeamWeightTable,
    PrunedTree,
    apply_observation,
    candidate_beams,
    compute_point_weights,
)
from .channel import ChannelRealization, probe
from .ckm import CkmGrid
from .codebook import BeamId, HierarchicalCodebook, build_codebook


@dataclass(frozen=True)
class ProbeRound:
    """One feedback round: beams probed at a layer and the winning index.

    ``probes`` is 0 for free descents (single-candidate traversals)."""

    layer: int
    probed: tuple[int, ...]
    feedback: int
    probes: int


def enumerate_activations(from_layer: int, num_layers: int) -> list[tuple[int, ...]]:
    """All layer subsets of {from_layer+1, .., L} that include L, as sorted
    tuples, in deterministic bitmask order."""
    if from_layer >= num_layers:
        raise ValueError("no layers left to activate")
    free = list(range(from_layer + 1, num_layers))
    out = []
    for mask in range(2 ** len(free)):
        layers = tuple(l for i, l in enumerate(free) if (mask >> i) & 1)
        out.append(layers + (num_layers,))
    return out


def _activation_matrix(acts: list[tuple[int, ...]], num_layers: int) -> np.ndarray:
    mat = np.zeros((len(acts), num_layers), dtype=np.uint8)
    for z, layers in enumerate(acts):
        mat[z, np.asarray(layers) - 1] = 1
    return mat


def overhead_for_target(
    tree: PrunedTree, activation, target: BeamId
) -> int:
    """Probe count of resolving ``target`` when probing exactly the layers
    in ``activation``: exhaustive at the earliest layer, then per later
    active layer the candidate descendants of the ancestor fixed at the
    previous one (skipped when fewer than two — free descent)."""
    L = tree.num_layers
    layers = tuple(sorted(set(int(l) for l in activation)))
    if not layers or layers[-1] != L or layers[0] < 1:
        raise ValueError(f"activation {activation} must be within [1, {L}] and include {L}")
    if target.layer != L or not tree.is_candidate(target):
        raise ValueError(f"target {target} is not a bottom-layer candidate")
    act = np.zeros(L, dtype=np.uint8)
    act[np.asarray(layers) - 1] = 1
    return int(kernels.probe_cost_single(tree.prefix_sums(), act, target.index, L))


def reward(tree: PrunedTree, weights, activation) -> float:
    """Negative weighted probe cost of an activation over all candidate
    bottom beams; ``weights`` is the bottom-layer weight vector."""
    L = tree.num_layers
    layers = tuple(sorted(set(int(l) for l in activation)))
    acts = _activation_matrix([layers], L)
    targets = tree.bottom_candidates().astype(np.int64)
    w = np.asarray(weights, dtype=np.float64)
    return float(kernels.activation_rewards(tree.prefix_sums(), acts, w, targets, L)[0])


def pick_activation(acts: list[tuple[int, ...]], scores: np.ndarray) -> int:
    """Index of the best activation: max score, then fewest layers, then
    deepest earliest layer, then first in enumeration order."""
    best = 0
    best_key = (scores[0], -len(acts[0]), acts[0][0])
    for z in range(1, len(acts)):
        key = (scores[z], -len(acts[z]), acts[z][0])
        if key > best_key:
            best = z
            best_key = key
    return best


def best_activation(
    tree: PrunedTree, weights, from_layer: int = 0
) -> tuple[tuple[int, ...], float]:
    """Winning activation and its reward for the current tree state."""
    L = tree.num_layers
    acts = enumerate_activations(from_layer, L)
    mat = _activation_matrix(acts, L)
    targets = tree.bottom_candidates().astype(np.int64)
    w = np.asarray(weights, dtype=np.float64)
    rewards = kernels.activation_rewards(tree.prefix_sums(), mat, w, targets, L)
    z = pick_activation(acts, rewards)
    return acts[z], float(rewards[z])


def optimal_layer(tree: PrunedTree, weights, from_layer: int = 0) -> int:
    """Layer to probe next: the earliest layer of the best activation, or
    the sentinel L+1 when a single bottom candidate remains."""
    L = tree.num_layers
    if len(tree.bottom_candidates()) == 1:
        return L + 1
    act, _ = best_activation(tree, weights, from_layer)
    return act[0]


def run_single_user(
    ckm: CkmGrid,
    prior,
    channel,
    noise_std: float,
    beta: float,
    codebook: HierarchicalCodebook | None = None,
    rng: np.random.Generator | None = None,
    retain_beams: int | None = None,
) -> tuple[BeamId, int, list[ProbeRound]]:
    """Full search episode; returns (chosen bottom beam, probe count, rounds)."""
    if codebook is None:
        codebook = build_codebook(ckm.num_antennas)
    if isinstance(channel, ChannelRealization):
        h = channel.vector(ckm.num_antennas)
    else:
        h = np.asarray(channel)
    table = compute_point_weights(ckm, prior, beta, retain_beams=retain_beams)
    tree = candidate_beams(table)
    L = ckm.num_layers
    overhead = 0
    transcript: list[ProbeRound] = []
    root: BeamId | None = None
    while True:
        bottom = tree.bottom_candidates()
        if len(bottom) == 1:
            chosen = BeamId(L, int(bottom[0]))
            break
        if root is not None and root.layer == L:
            chosen = root
            break
        from_layer = 0 if root is None else root.layer
        layer = optimal_layer(tree, table.bottom_weights(), from_layer)
        cands = tree.candidates(layer)
        if len(cands) == 1:
            # nothing to compare; descend for free
            observed = BeamId(layer, int(cands[0]))
            transcript.append(ProbeRound(layer, (observed.index,), observed.index, 0))
        else:
            mags = np.array(
                [
                    probe(h, codebook.codeword(BeamId(layer, int(n))), noise_std, rng)
                    for n in cands
                ]
            )
            fb = int(cands[int(np.argmax(mags))])
            observed = BeamId(layer, fb)
            overhead += len(cands)
            transcript.append(
                ProbeRound(layer, tuple(int(n) for n in cands), fb, len(cands))
            )
        tree = apply_observation(table, tree, observed)
        root = observed
    return chosen, overhead, transcript
