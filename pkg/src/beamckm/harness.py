"""Monte-Carlo harness: scenario configs, paired trial runs, summaries.

A scenario JSON pins the array, the map grid, the propagation environment,
the per-user location priors, and the sweep settings.  Trials are paired:
every algorithm and SNR point sees the same sampled user positions, and
the per-probe noise stream depends only on (seed, trial, SNR index, user),
so algorithm comparisons are common-random-number comparisons.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import ArrayConfig, Environment, Obstacle, Scatterer, probe, synthesize_channel
from .ckm import CkmGrid, GridSpec
from .codebook import BeamId, HierarchicalCodebook, build_codebook
from .lookahead import run_lookahead
from .multiuser import run_multi_user
from .position import PositionPrior, SubRegion, sample_true_position
from .strategy import ProbeRound, run_single_user

ALGORITHMS = ("alg1", "alg2", "alg3", "baseline-hier", "baseline-exhaustive")

CSV_FIELDS = (
    "trial_id",
    "algorithm",
    "snr_db",
    "user_id",
    "overhead",
    "chosen_layer",
    "chosen_index",
    "oracle_layer",
    "oracle_index",
    "gain_ratio_db",
    "se_bps_hz",
)


@dataclass(frozen=True)
class RegionSpec:
    """One prior region: an axis-aligned rectangle (grid points whose cell
    centers fall inside, bounds closed) or an explicit coordinate list."""

    prior: float
    rect: tuple[float, float, float, float] | None = None
    points: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if (self.rect is None) == (self.points is None):
            raise ValueError("region needs exactly one of 'rect' or 'points'")


@dataclass(frozen=True)
class UserSpec:
    subregions: tuple[RegionSpec, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    array: ArrayConfig
    grid: GridSpec
    environment: Environment
    users: tuple[UserSpec, ...]
    snr_db: tuple[float, ...]
    trials: int = 1000
    seed: int = 0
    beta: float = 0.5
    eta: float = 0.9
    algorithms: tuple[str, ...] = ALGORITHMS
    ckm_staleness_sigma: float = 0.0
    retain_beams: int | None = None
    name: str = "scenario"

    def __post_init__(self):
        if not self.users:
            raise ValueError("scenario needs at least one user")
        if not self.snr_db:
            raise ValueError("scenario needs at least one SNR point")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithm(s) {bad}; valid: {list(ALGORITHMS)}")


def _check_keys(obj: dict, allowed: dict, where: str) -> None:
    """Strict schema guard: unknown keys are config bugs, not extensions."""
    if not isinstance(obj, dict):
        raise ValueError(f"{where} must be a JSON object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ValueError(f"unknown key(s) {unknown} in {where}")
    missing = sorted(k for k, required in allowed.items() if required and k not in obj)
    if missing:
        raise ValueError(f"missing key(s) {missing} in {where}")


def _snr_value(x) -> float:
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "infinity"):
            return math.inf
        try:
            return float(s)
        except ValueError:
            raise ValueError(f"SNR entries must be numbers or 'inf', got {x!r}") from None
    return float(x)


def scenario_from_dict(cfg: dict) -> ScenarioConfig:
    """Build a validated config from a parsed JSON object."""
    _check_keys(
        cfg,
        {
            "array": True,
            "grid": True,
            "environment": True,
            "users": True,
            "snr_db": True,
            "trials": False,
            "seed": False,
            "beta": False,
            "eta": False,
            "algorithms": False,
            "ckm_staleness_sigma": False,
            "retain_beams": False,
            "name": False,
        },
        "scenario",
    )
    arr = cfg["array"]
    _check_keys(
        arr,
        {"num_antennas": True, "carrier_frequency_hz": True, "bs_position": True},
        "array",
    )
    array = ArrayConfig(
        num_antennas=int(arr["num_antennas"]),
        carrier_frequency_hz=float(arr["carrier_frequency_hz"]),
        bs_position=tuple(float(v) for v in arr["bs_position"]),
    )
    gr = cfg["grid"]
    _check_keys(
        gr,
        {
            "extent_x": True,
            "extent_y": True,
            "spacing_x": True,
            "spacing_y": True,
            "origin": False,
        },
        "grid",
    )
    grid = GridSpec(
        extent_x=float(gr["extent_x"]),
        extent_y=float(gr["extent_y"]),
        spacing_x=float(gr["spacing_x"]),
        spacing_y=float(gr["spacing_y"]),
        origin=tuple(float(v) for v in gr.get("origin", (0.0, 0.0))),
    )
    env = cfg["environment"]
    _check_keys(
        env,
        {
            "scatterers": False,
            "obstacles": False,
            "max_paths": False,
            "pathloss_exponent": False,
            "rng_seed": False,
        },
        "environment",
    )
    scatterers = []
    for i, s in enumerate(env.get("scatterers", [])):
        _check_keys(s, {"position": True, "reflection": True}, f"scatterers[{i}]")
        scatterers.append(
            Scatterer(
                position=tuple(float(v) for v in s["position"]),
                reflection=float(s["reflection"]),
            )
        )
    obstacles = []
    for i, o in enumerate(env.get("obstacles", [])):
        _check_keys(o, {"start": True, "end": True}, f"obstacles[{i}]")
        obstacles.append(
            Obstacle(
                start=tuple(float(v) for v in o["start"]),
                end=tuple(float(v) for v in o["end"]),
            )
        )
    environment = Environment(
        scatterers=tuple(scatterers),
        obstacles=tuple(obstacles),
        max_paths=int(env.get("max_paths", 4)),
        pathloss_exponent=float(env.get("pathloss_exponent", 1.0)),
        rng_seed=int(env.get("rng_seed", 0)),
    )
    users = []
    for ui, u in enumerate(cfg["users"]):
        _check_keys(u, {"subregions": True}, f"users[{ui}]")
        regions = []
        for ri, r in enumerate(u["subregions"]):
            _check_keys(
                r,
                {"prior": True, "rect": False, "points": False},
                f"users[{ui}].subregions[{ri}]",
            )
            rect = r.get("rect")
            pts = r.get("points")
            regions.append(
                RegionSpec(
                    prior=float(r["prior"]),
                    rect=None if rect is None else tuple(float(v) for v in rect),
                    points=None
                    if pts is None
                    else tuple((float(p[0]), float(p[1])) for p in pts),
                )
            )
        users.append(UserSpec(subregions=tuple(regions)))
    retain = cfg.get("retain_beams")
    return ScenarioConfig(
        array=array,
        grid=grid,
        environment=environment,
        users=tuple(users),
        snr_db=tuple(_snr_value(v) for v in cfg["snr_db"]),
        trials=int(cfg.get("trials", 1000)),
        seed=int(cfg.get("seed", 0)),
        beta=float(cfg.get("beta", 0.5)),
        eta=float(cfg.get("eta", 0.9)),
        algorithms=tuple(cfg.get("algorithms", ALGORITHMS)),
        ckm_staleness_sigma=float(cfg.get("ckm_staleness_sigma", 0.0)),
        retain_beams=None if retain is None else int(retain),
        name=str(cfg.get("name", "scenario")),
    )


def load_scenario(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def region_points(grid: GridSpec, region: RegionSpec) -> np.ndarray:
    """Grid-point indices covered by one region, ascending."""
    if region.rect is not None:
        x0, y0, x1, y1 = region.rect
        if x1 < x0 or y1 < y0:
            raise ValueError(f"rect {region.rect} has negative extent")
        coords = grid.point_coords()
        inside = (
            (coords[:, 0] >= x0)
            & (coords[:, 0] <= x1)
            & (coords[:, 1] >= y0)
            & (coords[:, 1] <= y1)
        )
        idx = np.flatnonzero(inside)
        if idx.size == 0:
            raise ValueError(f"rect {region.rect} covers no grid point")
        return idx
    idx = np.array([grid.snap_index(p) for p in region.points], dtype=np.int64)
    if len(np.unique(idx)) != len(idx):
        raise ValueError("explicit point list snaps onto duplicate grid points")
    return idx


def user_priors(config: ScenarioConfig) -> list[PositionPrior]:
    """One location prior per user from its declared regions."""
    priors = []
    for user in config.users:
        subs = tuple(
            SubRegion(points=tuple(int(i) for i in region_points(config.grid, r)), prior=r.prior)
            for r in user.subregions
        )
        priors.append(PositionPrior(subregions=subs))
    return priors


@dataclass(frozen=True)
class TrialRecord:
    """One user's outcome for one (trial, algorithm, SNR) cell."""

    trial_id: int
    algorithm: str
    snr_db: float
    user_id: int
    overhead: float
    chosen: BeamId
    oracle: BeamId
    gain_ratio_db: float
    se_bps_hz: float


def reference_gain(ckm: CkmGrid) -> float:
    """Scene-scale matched gain: median over grid points of the best
    bottom-layer map gain.  SNR settings are relative to this, so a
    configured SNR describes a typical aligned link, not the raw transmit
    power."""
    best = ckm.bottom_gains.max(axis=0).astype(np.float64)
    return float(np.median(best))


def noise_std_for_snr(snr_db: float, ref_gain: float) -> float:
    """Per-probe complex noise std giving the requested SNR at the
    reference gain; infinite SNR means a noiseless run."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return ref_gain * 10.0 ** (-snr_db / 20.0)


def baseline_hierarchical(
    channel,
    codebook: HierarchicalCodebook,
    noise_std: float,
    rng: np.random.Generator | None = None,
) -> tuple[BeamId, int, list[ProbeRound]]:
    """Map-blind bisection: probe both children at every layer, keep the
    stronger, always 2L probes."""
    h = channel.vector(codebook.num_antennas) if hasattr(channel, "vector") else np.asarray(channel)
    L = codebook.num_layers
    idx = 1
    overhead = 0
    transcript = []
    for layer in range(1, L + 1):
        kids = (2 * idx - 1, 2 * idx)
        mags = [
            probe(h, codebook.codeword(BeamId(layer, k)), noise_std, rng) for k in kids
        ]
        idx = kids[int(np.argmax(mags))]
        overhead += 2
        transcript.append(ProbeRound(layer, kids, idx, 2))
    return BeamId(L, idx), overhead, transcript


def baseline_exhaustive(
    channel,
    codebook: HierarchicalCodebook,
    noise_std: float,
    rng: np.random.Generator | None = None,
) -> tuple[BeamId, int, list[ProbeRound]]:
    """Probe every bottom beam once, keep the strongest."""
    h = channel.vector(codebook.num_antennas) if hasattr(channel, "vector") else np.asarray(channel)
    L = codebook.num_layers
    n = codebook.num_antennas
    mags = np.array(
        [probe(h, codebook.codeword(BeamId(L, i)), noise_std, rng) for i in range(1, n + 1)]
    )
    idx = int(np.argmax(mags)) + 1
    transcript = [ProbeRound(L, tuple(range(1, n + 1)), idx, n)]
    return BeamId(L, idx), n, transcript


def _finish(
    trial: int,
    algo: str,
    snr: float,
    user: int,
    overhead: float,
    chosen: BeamId,
    oracle: BeamId,
    gains: np.ndarray,
    sigma: float,
) -> TrialRecord:
    g_c = float(gains[chosen.index - 1])
    g_o = float(gains[oracle.index - 1])
    ratio_db = -math.inf if g_c == 0.0 else 20.0 * math.log10(g_c / g_o)
    se = math.inf if sigma == 0.0 else math.log2(1.0 + (g_c / sigma) ** 2)
    return TrialRecord(trial, algo, snr, user, overhead, chosen, oracle, ratio_db, se)


def run_trials(
    config: ScenarioConfig,
    ckm: CkmGrid,
    algorithms=None,
    trials: int | None = None,
    seed: int | None = None,
    snr_db=None,
) -> list[TrialRecord]:
    """Paired Monte-Carlo sweep over trials x SNR points x algorithms."""
    if ckm.num_antennas != config.array.num_antennas:
        raise ValueError("map antenna count does not match the scenario array")
    if ckm.grid != config.grid:
        raise ValueError("map grid does not match the scenario grid")
    algos = tuple(algorithms) if algorithms is not None else config.algorithms
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise ValueError(f"unknown algorithm(s) {bad}")
    n_trials = config.trials if trials is None else int(trials)
    base_seed = config.seed if seed is None else int(seed)
    snrs = config.snr_db if snr_db is None else tuple(_snr_value(v) for v in snr_db)
    codebook = build_codebook(config.array.num_antennas)
    priors = user_priors(config)
    K = len(priors)
    L = ckm.num_layers
    ref = reference_gain(ckm)
    bottom = codebook.layer_matrix(L)
    records: list[TrialRecord] = []
    for t in range(n_trials):
        pos_rng = np.random.default_rng([base_seed, 101, t])
        points = [sample_true_position(priors[k], pos_rng) for k in range(K)]
        hs, gvecs, oracles = [], [], []
        for k in range(K):
            pos = ckm.grid.point_position(points[k])
            h = synthesize_channel(config.environment, config.array, pos).vector(
                config.array.num_antennas
            )
            g = np.abs(bottom @ np.conj(h))
            hs.append(h)
            gvecs.append(g)
            oracles.append(BeamId(L, int(np.argmax(g)) + 1))
        for si, snr in enumerate(snrs):
            sigma = noise_std_for_snr(snr, ref)
            for algo in algos:
                rngs = [
                    np.random.default_rng([base_seed, 202, t, si, k]) for k in range(K)
                ]
                if algo == "alg3":
                    chosen, total, _ = run_multi_user(
                        ckm,
                        priors,
                        hs,
                        sigma,
                        config.beta,
                        config.eta,
                        codebook=codebook,
                        rngs=rngs,
                        retain_beams=config.retain_beams,
                    )
                    share = total / K
                    for k in range(K):
                        records.append(
                            _finish(t, algo, snr, k, share, chosen[k], oracles[k], gvecs[k], sigma)
                        )
                    continue
                for k in range(K):
                    if algo == "alg1":
                        ch, ov, _ = run_single_user(
                            ckm,
                            priors[k],
                            hs[k],
                            sigma,
                            config.beta,
                            codebook=codebook,
                            rng=rngs[k],
                            retain_beams=config.retain_beams,
                        )
                    elif algo == "alg2":
                        ch, ov, _ = run_lookahead(
                            ckm,
                            priors[k],
                            hs[k],
                            sigma,
                            config.beta,
                            codebook=codebook,
                            rng=rngs[k],
                            retain_beams=config.retain_beams,
                        )
                    elif algo == "baseline-hier":
                        ch, ov, _ = baseline_hierarchical(hs[k], codebook, sigma, rngs[k])
                    else:
                        ch, ov, _ = baseline_exhaustive(hs[k], codebook, sigma, rngs[k])
                    records.append(
                        _finish(t, algo, snr, k, float(ov), ch, oracles[k], gvecs[k], sigma)
                    )
    return records


def _fmt(x: float) -> str:
    return repr(float(x))


def write_results_csv(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow(
                [
                    r.trial_id,
                    r.algorithm,
                    _fmt(r.snr_db),
                    r.user_id,
                    _fmt(r.overhead),
                    r.chosen.layer,
                    r.chosen.index,
                    r.oracle.layer,
                    r.oracle.index,
                    _fmt(r.gain_ratio_db),
                    _fmt(r.se_bps_hz),
                ]
            )


def read_results_csv(path) -> list[TrialRecord]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"unexpected results header {header}")
        for row in reader:
            out.append(
                TrialRecord(
                    trial_id=int(row[0]),
                    algorithm=row[1],
                    snr_db=float(row[2]),
                    user_id=int(row[3]),
                    overhead=float(row[4]),
                    chosen=BeamId(int(row[5]), int(row[6])),
                    oracle=BeamId(int(row[7]), int(row[8])),
                    gain_ratio_db=float(row[9]),
                    se_bps_hz=float(row[10]),
                )
            )
    return out


def _cdf(values: np.ndarray) -> list[tuple[float, float]]:
    vals = np.sort(np.asarray(values, dtype=np.float64))
    xs = np.unique(vals)
    return [(float(x), float(np.searchsorted(vals, x, side="right") / vals.size)) for x in xs]


def summarize(records, cdf_kinds=()) -> tuple[list[dict], dict]:
    """Aggregate per (algorithm, SNR): mean/median per-trial probe totals,
    beam hit rate, mean gain loss and spectral efficiency; optionally
    empirical CDF tables for 'overhead' (per-trial totals) and 'gain'
    (per-row dB loss)."""
    for kind in cdf_kinds:
        if kind not in ("overhead", "gain"):
            raise ValueError(f"unknown CDF kind {kind!r}")
    groups: dict = {}
    for r in records:
        groups.setdefault((r.algorithm, r.snr_db), []).append(r)
    stats = []
    tables: dict = {kind: [] for kind in cdf_kinds}
    for algo, snr in sorted(groups, key=lambda k: (k[0], k[1])):
        rows = groups[(algo, snr)]
        per_trial: dict = {}
        for r in rows:
            per_trial[r.trial_id] = per_trial.get(r.trial_id, 0.0) + r.overhead
        totals = np.array(sorted(per_trial.values()), dtype=np.float64)
        totals_by_id = np.array([per_trial[t] for t in sorted(per_trial)])
        gains = np.array([r.gain_ratio_db for r in rows])
        stats.append(
            {
                "algorithm": algo,
                "snr_db": snr,
                "trials": len(per_trial),
                "users": len({r.user_id for r in rows}),
                "mean_overhead": float(totals.mean()),
                "median_overhead": float(np.median(totals)),
                "hit_rate": float(np.mean([r.chosen == r.oracle for r in rows])),
                "mean_gain_ratio_db": float(gains.mean()),
                "mean_se_bps_hz": float(np.mean([r.se_bps_hz for r in rows])),
            }
        )
        if "overhead" in tables:
            tables["overhead"].extend(
                {"algorithm": algo, "snr_db": snr, "value": v, "cdf": c}
                for v, c in _cdf(totals_by_id)
            )
        if "gain" in tables:
            tables["gain"].extend(
                {"algorithm": algo, "snr_db": snr, "value": v, "cdf": c}
                for v, c in _cdf(gains)
            )
    return stats, tables


def write_summary_csv(stats: list[dict], path) -> None:
    fields = (
        "algorithm",
        "snr_db",
        "trials",
        "users",
        "mean_overhead",
        "median_overhead",
        "hit_rate",
        "mean_gain_ratio_db",
        "mean_se_bps_hz",
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fields)
        for row in stats:
            w.writerow([row[f] if f in ("algorithm", "trials", "users") else _fmt(row[f]) for f in fields])


def write_cdf_csv(table: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("algorithm", "snr_db", "value", "cdf"))
        for row in table:
            w.writerow([row["algorithm"], _fmt(row["snr_db"]), _fmt(row["value"]), _fmt(row["cdf"])])
