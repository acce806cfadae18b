"""Two-level lookahead descent over the pruned tree.

Instead of scoring every layer subset, each round inspects only the
candidate children and grandchildren below the current node and picks
between probing one level down or skipping straight to two levels down,
using the expected probe counts of the two options.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamtree import apply_observation, candidate_beams, compute_point_weights
from .channel import ChannelRealization, probe
from .ckm import CkmGrid
from .codebook import BeamId, HierarchicalCodebook, build_codebook
from .strategy import ProbeRound

FULL_TREE = "full-tree"
SINGLE_CHAIN = "single-chain"
ASYMMETRIC = "asymmetric"
FORCED_DESCENT = "forced-descent"
TERMINAL = "terminal"


@dataclass
class SubtreeView:
    """Candidate children/grandchildren below a node (the virtual root for
    ``root=None``) plus the grandchild weights used to rank the options.

    ``grandchildren`` is None when the child layer is already the bottom."""

    root_layer: int
    children: np.ndarray
    grandchildren: list[np.ndarray] | None
    gc_weights: list[np.ndarray] | None


def subtree_view(tree, layer_weights: list[np.ndarray], root: BeamId | None) -> SubtreeView:
    """Collect the two levels below ``root`` from the current candidates."""
    L = tree.num_layers
    root_layer = 0 if root is None else root.layer
    child_layer = root_layer + 1
    if child_layer > L:
        raise ValueError("node is already at the bottom layer")
    children = tree.candidates_under(child_layer, root)
    if child_layer == L:
        return SubtreeView(root_layer, children, None, None)
    gcs = []
    gws = []
    w = layer_weights[child_layer]  # list index layer-1, so this is layer child_layer+1
    for c in children:
        g = tree.candidates_under(child_layer + 1, BeamId(child_layer, int(c)))
        gcs.append(g)
        gws.append(w[g - 1])
    return SubtreeView(root_layer, children, gcs, gws)


def classify(view: SubtreeView) -> str:
    """Name the local topology that decides between the two probe depths."""
    nc = len(view.children)
    if nc == 0:
        raise ValueError("no candidate children below the node")
    if nc == 1:
        return FORCED_DESCENT
    if view.grandchildren is None:
        return TERMINAL
    counts = sorted(len(g) for g in view.grandchildren)
    if counts == [2, 2]:
        return FULL_TREE
    if counts == [1, 1]:
        return SINGLE_CHAIN
    if counts == [1, 2]:
        return ASYMMETRIC
    raise ValueError(f"unexpected grandchild counts {counts}")


def next_layer(view: SubtreeView, kind: str | None = None) -> int:
    """Layer to probe below the node.

    Full binary growth keeps the one-level step (two probes now, two
    later); a single chain on both sides jumps two levels (two probes
    total); the mixed case compares the expected counts of the two plans
    and jumps only when the three-grandchild probe is expected cheaper.
    """
    if kind is None:
        kind = classify(view)
    l = view.root_layer
    if kind in (FORCED_DESCENT, TERMINAL, FULL_TREE):
        return l + 1
    if kind == SINGLE_CHAIN:
        return l + 2
    if kind != ASYMMETRIC:
        raise ValueError(f"unknown topology {kind!r}")
    if len(view.grandchildren[0]) == 2:
        pair, single = 0, 1
    else:
        pair, single = 1, 0
    wa, wb = (float(x) for x in view.gc_weights[pair])
    wc = float(view.gc_weights[single][0])
    t_stepwise = 4.0 * wa + 4.0 * wb + 2.0 * wc
    t_skip = 3.0 * (wa + wb + wc)
    return l + 1 if t_stepwise <= t_skip else l + 2


def run_lookahead(
    ckm: CkmGrid,
    prior,
    channel,
    noise_std: float,
    beta: float,
    codebook: HierarchicalCodebook | None = None,
    rng: np.random.Generator | None = None,
    retain_beams: int | None = None,
) -> tuple[BeamId, int, list[ProbeRound]]:
    """Full lookahead episode; returns (chosen beam, probe count, rounds)."""
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
        view = subtree_view(tree, table.layer_weights(), root)
        kind = classify(view)
        layer = next_layer(view, kind)
        if kind == FORCED_DESCENT:
            observed = BeamId(layer, int(view.children[0]))
            transcript.append(ProbeRound(layer, (observed.index,), observed.index, 0))
        else:
            if layer == view.root_layer + 1:
                cands = view.children
            else:
                cands = np.concatenate(view.grandchildren)
                cands.sort()
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
