"""Episode simulation and sweep experiments over SNR and decoder temperature.

Per-episode randomness is derived by hashing (eval seed, sweep axis, cell
index, episode index) and never the strategy, so all strategies replay the
same starts and the same channel noise within a cell: paired comparisons
across strategies see common random numbers, and results are byte-identical
regardless of scheduling or worker count.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, replace
from enum import Enum
from multiprocessing import Pool

from .channel import ChannelConfig
from .equalizer import Policy, _clip
from .gridworld import GridConfig, Observation, step, validate_observation
from .language import (
    DEFAULT_JITTER_RADIUS,
    Language,
    perturb_language,
    synthesize_language,
)
from .seeding import derive_seed
from .transport import CodebookParams, TransformCodebook, build_codebook

CSV_HEADER = "strategy,snr_db,beta,episodes,mean_length,std_length,stderr_length,success_rate"


class Strategy(str, Enum):
    NO_EQUALIZATION = "no_equalization"
    SOURCE_GROUNDED = "source_grounded"
    TARGET_GROUNDED = "target_grounded"
    SM_EQUALIZED = "sm_equalized"
    EM_EQUALIZED = "em_equalized"


DEFAULT_STRATEGIES: tuple[Strategy, ...] = tuple(Strategy)

_EQUALIZED = (Strategy.SM_EQUALIZED, Strategy.EM_EQUALIZED)


@dataclass(frozen=True)
class EpisodeRecord:
    strategy: Strategy
    snr_db: float
    beta: float
    length: int
    success: bool
    seed: int


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    snr_db: float
    beta: float
    episodes: int
    mean_length: float
    std_length: float
    stderr_length: float
    success_rate: float


@dataclass(frozen=True)
class SweepConfig:
    grid: GridConfig = GridConfig()
    source_seed: int = 1
    target_seed: int = 2
    eval_seed: int = 0
    snr_grid: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, math.inf)
    beta: float = math.inf
    beta_grid: tuple[float, ...] = (0.0, 1.0, 2.0, 5.0, math.inf)
    snr: float = math.inf
    episodes_per_point: int = 2000
    strategies: tuple[Strategy, ...] = DEFAULT_STRATEGIES
    q_source: str = "decoder"
    clip: bool = True
    perturb_encoder: float = 0.0
    jitter_radius: float = DEFAULT_JITTER_RADIUS
    output_path: str | None = None


def sample_start(rng: random.Random, cfg: GridConfig) -> Observation:
    """Uniform treasure cell, then uniform agent cell among the others.

    Consumes exactly two draws so seed streams stay aligned.
    """
    cells = cfg.width * cfg.height
    t = rng.randrange(cells)
    a = rng.randrange(cells - 1)
    if a >= t:
        a += 1
    return Observation(
        (a % cfg.width, a // cfg.width),
        (t % cfg.width, t // cfg.width),
    )


def make_policy(strategy: Strategy, src: Language, tgt: Language,
                codebook: TransformCodebook | None,
                q_source: str = "decoder") -> Policy | None:
    if strategy is Strategy.SM_EQUALIZED:
        if codebook is None:
            raise ValueError(f"strategy {strategy.value} requires a codebook")
        return Policy("sm", codebook=codebook, source=src)
    if strategy is Strategy.EM_EQUALIZED:
        if codebook is None:
            raise ValueError(f"strategy {strategy.value} requires a codebook")
        return Policy("em", codebook=codebook, source=src, target=tgt, q_source=q_source)
    return None


def run_episode(strategy: Strategy, src: Language, tgt: Language, *,
                channel: ChannelConfig, beta: float, seed: int = 0,
                rng: random.Random | None = None,
                codebook: TransformCodebook | None = None,
                policy: Policy | None = None,
                start: Observation | None = None,
                clip: bool = True, q_source: str = "decoder",
                on_step=None) -> EpisodeRecord:
    """Run one episode and report its length and outcome.

    The encoder/decoder wiring follows the strategy; equalized strategies
    transform the source symbol before transmission and decode with the
    target language.  `policy` may pre-supply (or, for no_equalization,
    inject) the transform selector; grounded strategies reject one.
    `on_step(index, obs, sent, received, action)` observes each transition.
    """
    if (src.grid.width, src.grid.height) != (tgt.grid.width, tgt.grid.height):
        raise ValueError("languages live on different grids")
    if strategy is Strategy.SOURCE_GROUNDED:
        enc_lang, dec_lang = src, src
    elif strategy is Strategy.TARGET_GROUNDED:
        enc_lang, dec_lang = tgt, tgt
    else:
        enc_lang, dec_lang = src, tgt
    if strategy in (Strategy.SOURCE_GROUNDED, Strategy.TARGET_GROUNDED):
        if policy is not None:
            raise ValueError("grounded strategies take no equalization policy")
    elif policy is None and strategy in _EQUALIZED:
        policy = make_policy(strategy, src, tgt, codebook, q_source)

    if rng is None:
        rng = random.Random(seed)
    grid = src.grid
    if start is None:
        start = sample_start(rng, grid)
    validate_observation(grid, start)
    if start.terminal:
        raise ValueError("episode cannot start on the treasure")

    encoder = enc_lang.encoder
    decoder = dec_lang.decoder(beta)
    sigma = channel.noise_sigma
    gauss = rng.gauss
    sample = decoder.sample
    selection = policy.selection if policy is not None else None
    max_steps = grid.max_steps

    obs = start
    steps = 0
    success = False
    while True:
        x = encoder[obs]
        if selection is not None:
            transform = selection(obs)
            if transform is not None:
                x = transform(x)
                if clip:
                    x = _clip(x)
        sent = x
        if sigma != 0.0:
            x = (x[0] + gauss(0.0, sigma), x[1] + gauss(0.0, sigma))
        act = sample(x, rng)
        if on_step is not None:
            on_step(steps + 1, obs, sent, x, act)
        obs = step(grid, obs, act)
        steps += 1
        if obs.agent == obs.treasure:
            success = True
            break
        if steps >= max_steps:
            break
    return EpisodeRecord(
        strategy=strategy, snr_db=channel.snr_db, beta=beta,
        length=steps, success=success, seed=seed,
    )


def prepare_languages(cfg: SweepConfig) -> tuple[Language, Language]:
    """Synthesize the sweep's language pair, applying any encoder perturbation."""
    src = synthesize_language(cfg.grid, cfg.source_seed, cfg.jitter_radius)
    if cfg.perturb_encoder > 0.0:
        src = perturb_language(src, cfg.perturb_encoder, cfg.source_seed)
    tgt = synthesize_language(cfg.grid, cfg.target_seed, cfg.jitter_radius)
    return src, tgt


def _cell_task(task) -> SweepRow:
    cfg, src, tgt, codebook, strategy, axis_tag, axis_idx, snr_db, beta = task
    policy = make_policy(strategy, src, tgt, codebook, cfg.q_source)
    channel = ChannelConfig(snr_db)
    n = cfg.episodes_per_point
    lengths = [0] * n
    successes = 0
    for ep in range(n):
        ep_seed = derive_seed(cfg.eval_seed, axis_tag, axis_idx, ep)
        start = sample_start(
            random.Random(derive_seed(cfg.eval_seed, axis_tag, "start", axis_idx, ep)),
            cfg.grid,
        )
        record = run_episode(
            strategy, src, tgt, channel=channel, beta=beta, seed=ep_seed,
            policy=policy, start=start, clip=cfg.clip, q_source=cfg.q_source,
        )
        lengths[ep] = record.length
        if record.success:
            successes += 1
    mean = sum(lengths) / n
    if n > 1:
        var = sum((v - mean) ** 2 for v in lengths) / (n - 1)
    else:
        var = 0.0
    std = math.sqrt(var)
    return SweepRow(
        strategy=strategy.value, snr_db=snr_db, beta=beta, episodes=n,
        mean_length=mean, std_length=std, stderr_length=std / math.sqrt(n),
        success_rate=successes / n,
    )


def _run_sweep(cfg: SweepConfig, axis_tag: str, axis_values: tuple[float, ...],
               cell_params, workers: int,
               codebook_params: CodebookParams) -> list[SweepRow]:
    if not axis_values:
        raise ValueError("empty sweep grid")
    if cfg.episodes_per_point < 1:
        raise ValueError("episodes_per_point must be positive")
    src, tgt = prepare_languages(cfg)
    # Any codebook-construction failure must surface before episodes run.
    codebook = None
    if any(s in _EQUALIZED for s in cfg.strategies):
        codebook = build_codebook(src, tgt, codebook_params)
    tasks = [
        (cfg, src, tgt, codebook, strategy, axis_tag, idx, *cell_params(value))
        for strategy in cfg.strategies
        for idx, value in enumerate(axis_values)
    ]
    if workers > 1:
        with Pool(workers) as pool:
            return pool.map(_cell_task, tasks)
    return [_cell_task(t) for t in tasks]


def sweep_snr(cfg: SweepConfig, workers: int = 1,
              codebook_params: CodebookParams = CodebookParams()) -> list[SweepRow]:
    """One row per (strategy, snr) cell at the config's fixed beta."""
    return _run_sweep(cfg, "snr", tuple(cfg.snr_grid),
                      lambda snr: (snr, cfg.beta), workers, codebook_params)


def sweep_beta(cfg: SweepConfig, workers: int = 1,
               codebook_params: CodebookParams = CodebookParams()) -> list[SweepRow]:
    """One row per (strategy, beta) cell at the config's fixed snr."""
    return _run_sweep(cfg, "beta", tuple(cfg.beta_grid),
                      lambda beta: (cfg.snr, beta), workers, codebook_params)


def rows_to_csv_text(rows: list[SweepRow]) -> str:
    """Render sweep rows with shortest round-trip float formatting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for r in rows:
        writer.writerow([
            r.strategy, r.snr_db, r.beta, r.episodes,
            r.mean_length, r.std_length, r.stderr_length, r.success_rate,
        ])
    return buf.getvalue()


def write_rows_csv(rows: list[SweepRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(rows_to_csv_text(rows))


def parse_float(text: str | float | int) -> float:
    """Float parser that accepts 'inf' (any case) for infinity."""
    value = float(text)
    if math.isnan(value):
        raise ValueError("NaN is not a valid value")
    return value


_CONFIG_FIELDS = {
    "grid", "source_seed", "target_seed", "eval_seed", "snr_grid", "beta",
    "beta_grid", "snr", "episodes_per_point", "strategies", "q_source",
    "clip", "perturb_encoder", "jitter_radius", "output_path",
}


def sweep_config_from_dict(data: dict, base: SweepConfig | None = None) -> SweepConfig:
    """Build a SweepConfig from a JSON-style dict mirroring its field names."""
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    cfg = base if base is not None else SweepConfig()
    updates: dict = {}
    if "grid" in data:
        g = data["grid"]
        updates["grid"] = GridConfig(
            width=int(g.get("width", 5)),
            height=int(g.get("height", 5)),
            max_steps=int(g.get("max_steps", 150)),
        )
    for key in ("source_seed", "target_seed", "eval_seed", "episodes_per_point"):
        if key in data:
            updates[key] = int(data[key])
    for key in ("beta", "snr", "perturb_encoder", "jitter_radius"):
        if key in data:
            updates[key] = parse_float(data[key])
    for key in ("snr_grid", "beta_grid"):
        if key in data:
            updates[key] = tuple(parse_float(v) for v in data[key])
    if "strategies" in data:
        updates["strategies"] = tuple(Strategy(s) for s in data["strategies"])
    if "q_source" in data:
        if data["q_source"] not in ("decoder", "oracle"):
            raise ValueError(f"unknown q_source {data['q_source']!r}")
        updates["q_source"] = data["q_source"]
    if "clip" in data:
        updates["clip"] = bool(data["clip"])
    if "output_path" in data:
        updates["output_path"] = data["output_path"]
    return replace(cfg, **updates)
