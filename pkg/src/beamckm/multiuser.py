"""Joint beam search for several receivers sharing downlink probes.

Every round picks one layer for the whole cell: each user's own
reward-optimal layer is computed as in the single-user search, a shared
layer is scored across users on normalized rewards, and the earliest of
those wins.  Users whose own choice matches the round layer descend on
their feedback; everyone else still hears the probes for free and prunes
its location hypotheses by correlating the measured gain profile with the
per-point map profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .beamtree import (
    BeamWeightTable,
    apply_observation,
    candidate_beams,
    compute_point_weights,
)
from .channel import ChannelRealization, probe
from .ckm import CkmGrid
from .codebook import BeamId, HierarchicalCodebook, build_codebook
from .strategy import (
    _activation_matrix,
    enumerate_activations,
    optimal_layer,
    pick_activation,
)


@dataclass(frozen=True)
class JointRound:
    """One shared round as one user saw it: the probed beam indices, the
    user's role that round (1 descended on feedback, 0 eavesdropped), its
    feedback index if any, and the round's probe count (0 for a free
    descent)."""

    layer: int
    probed: tuple[int, ...]
    indicator: int
    feedback: int | None
    probes: int


def similarity(g_obs: np.ndarray, g_map: np.ndarray) -> float:
    """Cosine similarity between an observed and a map gain profile;
    defined as 0 when either profile is all-zero."""
    a = np.asarray(g_obs, dtype=np.float64)
    b = np.asarray(g_map, dtype=np.float64)
    if a.ndim != 1 or a.shape != b.shape:
        raise ValueError(f"profiles must be equal-length vectors, got {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("profiles must be non-empty")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(a @ b / (na * nb))


def map_gain_vector(ckm: CkmGrid, point: int, beams) -> tuple[np.ndarray, BeamId]:
    """Map gain profile of a grid point over ``beams`` plus the profile's
    best beam (ties go to the earliest list position)."""
    g = np.array([float(ckm.beam_row(b)[point]) for b in beams], dtype=np.float64)
    return g, beams[int(np.argmax(g))]


def joint_layer(trees, weights, from_layers) -> int:
    """Shared probing layer: enumerate activations from the earliest
    active root, score each by the sum of per-user rewards normalized by
    the user's total absolute reward (layers at or above a user's root are
    ignored for that user), and take the winner's earliest layer."""
    L = trees[0].num_layers
    common_from = min(from_layers)
    acts = enumerate_activations(common_from, L)
    mat = _activation_matrix(acts, L)
    score = np.zeros(len(acts), dtype=np.float64)
    for tree, w, fl in zip(trees, weights, from_layers):
        m = mat
        if fl > common_from:
            m = mat.copy()
            m[:, :fl] = 0
        targets = tree.bottom_candidates().astype(np.int64)
        r = kernels.activation_rewards(
            tree.prefix_sums(), m, np.asarray(w, dtype=np.float64), targets, L
        )
        norm = float(np.abs(r).sum())
        if norm > 0.0:
            score += r / norm
    return acts[pick_activation(acts, score)][0]


def select_round(single_layers, joint: int, num_layers: int) -> tuple[int, tuple[int, ...]]:
    """Round layer and per-user role flags.

    ``single_layers`` holds each user's own optimal layer, with the
    sentinel ``num_layers + 1`` marking finished users (flag -1).  The
    round layer is the earliest among the joint choice and the active
    users' own choices; if no user's own choice equals it, it falls back
    to the earliest own choice so at least one user can descend."""
    active = [l for l in single_layers if l <= num_layers]
    if not active:
        raise ValueError("select_round needs at least one active user")
    l_opt = min(min(active), joint)
    if l_opt not in active:
        l_opt = min(active)
    flags = tuple(
        -1 if l > num_layers else (1 if l == l_opt else 0) for l in single_layers
    )
    return l_opt, flags


def union_beams(trees, layer: int) -> np.ndarray:
    """Deduplicated, ascending union of the trees' candidates at a layer."""
    return np.unique(np.concatenate([t.candidates(layer) for t in trees]))


def prune_user_points(
    table: BeamWeightTable,
    beams,
    g_obs: np.ndarray,
    f_obs: BeamId | None,
    eta: float,
) -> np.ndarray:
    """Drop location hypotheses inconsistent with a round's measurements.

    Survivors need map profiles whose similarity to ``g_obs`` exceeds
    ``eta`` times the best alive similarity and, when the user descended
    on ``f_obs``, a map profile peaking on that same beam.  If nothing
    passes, the best-similarity points are kept; an all-zero ``g_obs``
    prunes nothing.  Applies the cut to ``table`` and returns the
    surviving grid-point ids."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    g_obs = np.asarray(g_obs, dtype=np.float64)
    if len(beams) != g_obs.size:
        raise ValueError("one observation per probed beam required")
    alive = table.point_alive
    if not alive.any():
        raise ValueError("no alive points to prune")
    no = float(np.linalg.norm(g_obs))
    if no == 0.0:
        return table.alive_points
    cols = np.array([2**b.layer - 2 + b.index - 1 for b in beams], dtype=np.int64)
    gm = table.gains[:, cols]
    nm = np.linalg.norm(gm, axis=1)
    sims = np.zeros(gm.shape[0], dtype=np.float64)
    ok = nm > 0.0
    sims[ok] = (gm[ok] @ g_obs) / (no * nm[ok])
    masked = np.where(alive, sims, -np.inf)
    smax = float(masked.max())
    surv = alive & (sims > eta * smax)
    if f_obs is not None:
        peak = np.argmax(gm, axis=1)
        surv &= np.array([beams[p] == f_obs for p in peak])
    if not surv.any():
        surv = alive & (masked == smax)
    table.kill_points(surv)
    return table.alive_points


def run_multi_user(
    ckm: CkmGrid,
    priors,
    channels,
    noise_std: float,
    beta: float,
    eta: float = 0.9,
    codebook: HierarchicalCodebook | None = None,
    rngs=None,
    retain_beams: int | None = None,
) -> tuple[list[BeamId], int, list[list[JointRound]]]:
    """Joint episode for all users; returns (chosen beams, total probe
    count charged once per shared round, per-user round transcripts)."""
    K = len(priors)
    if len(channels) != K:
        raise ValueError("need one channel per user")
    if rngs is None:
        rngs = [None] * K
    if len(rngs) != K:
        raise ValueError("need one rng (or None) per user")
    if codebook is None:
        codebook = build_codebook(ckm.num_antennas)
    L = ckm.num_layers
    hs = []
    for c in channels:
        if isinstance(c, ChannelRealization):
            hs.append(c.vector(ckm.num_antennas))
        else:
            hs.append(np.asarray(c))
    tables = [compute_point_weights(ckm, p, beta, retain_beams=retain_beams) for p in priors]
    trees = [candidate_beams(t) for t in tables]
    roots: list[BeamId | None] = [None] * K
    chosen: list[BeamId | None] = [None] * K
    transcripts: list[list[JointRound]] = [[] for _ in range(K)]
    total = 0
    for _ in range(K * (L + 2) + 2):
        for k in range(K):
            if chosen[k] is not None:
                continue
            bottom = trees[k].bottom_candidates()
            if len(bottom) == 1:
                chosen[k] = BeamId(L, int(bottom[0]))
            elif roots[k] is not None and roots[k].layer == L:
                chosen[k] = roots[k]
        active = [k for k in range(K) if chosen[k] is None]
        if not active:
            break
        singles = []
        for k in range(K):
            if chosen[k] is not None:
                singles.append(L + 1)
            else:
                fl = 0 if roots[k] is None else roots[k].layer
                singles.append(optimal_layer(trees[k], tables[k].bottom_weights(), fl))
        fls = [0 if roots[k] is None else roots[k].layer for k in active]
        shared = joint_layer(
            [trees[k] for k in active],
            [tables[k].bottom_weights() for k in active],
            fls,
        )
        l_opt, flags = select_round(singles, shared, L)
        matching = [k for k in range(K) if flags[k] == 1]
        indices = union_beams([trees[k] for k in matching], l_opt)
        beams = [BeamId(l_opt, int(n)) for n in indices]
        if len(beams) == 1:
            observed = beams[0]
            for k in matching:
                trees[k] = apply_observation(tables[k], trees[k], observed)
                roots[k] = observed
                transcripts[k].append(
                    JointRound(l_opt, (observed.index,), 1, observed.index, 0)
                )
            continue
        codewords = [codebook.codeword(b) for b in beams]
        total += len(beams)
        for k in active:
            g_obs = np.array(
                [probe(hs[k], cw, noise_std, rngs[k]) for cw in codewords]
            )
            if flags[k] == 1:
                f_obs = beams[int(np.argmax(g_obs))]
            else:
                f_obs = None
            prune_user_points(tables[k], beams, g_obs, f_obs, eta)
            if f_obs is not None:
                tables[k].restrict_to_subtree(f_obs)
                roots[k] = f_obs
            if (
                not tables[k].uniform_fallback
                and tables[k].bottom_weights().max(initial=0.0) <= 0.0
            ):
                tables[k].uniform_fallback = True
            trees[k] = candidate_beams(tables[k])
            trees[k].root = roots[k]
            transcripts[k].append(
                JointRound(
                    l_opt,
                    tuple(int(n) for n in indices),
                    int(flags[k]),
                    None if f_obs is None else f_obs.index,
                    len(beams),
                )
            )
    else:
        raise RuntimeError("joint search exceeded its round budget")
    return chosen, total, transcripts
