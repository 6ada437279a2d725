import math
import random
from dataclasses import replace

import pytest

from semeq.channel import ChannelConfig
from semeq.equalizer import Policy
from semeq.gridworld import GridConfig, Observation, all_observations, manhattan
from semeq.harness import (
    CSV_HEADER,
    Strategy,
    SweepConfig,
    make_policy,
    parse_float,
    prepare_languages,
    rows_to_csv_text,
    run_episode,
    sample_start,
    sweep_beta,
    sweep_config_from_dict,
    sweep_snr,
    write_rows_csv,
)
from semeq.language import synthesize_language
from semeq.seeding import derive_seed


class CountingRandom(random.Random):
    def __init__(self, seed):
        super().__init__(seed)
        self.calls = 0

    def randrange(self, *args, **kwargs):
        self.calls += 1
        return super().randrange(*args, **kwargs)


GROUNDED_ONLY = (Strategy.NO_EQUALIZATION, Strategy.SOURCE_GROUNDED,
                 Strategy.TARGET_GROUNDED)


def test_grounded_noiseless_episodes_are_shortest_paths(grid, lang_tgt):
    channel = ChannelConfig(math.inf)
    for start in all_observations(grid):
        record = run_episode(
            Strategy.TARGET_GROUNDED, lang_tgt, lang_tgt,
            channel=channel, beta=math.inf, start=start,
        )
        assert record.success
        assert record.length == manhattan(start.agent, start.treasure)


def test_no_equalization_with_shared_language_equals_source_grounded(lang_src, lang_tgt):
    channel = ChannelConfig(4.0)
    for seed in range(50):
        base = run_episode(Strategy.SOURCE_GROUNDED, lang_src, lang_tgt,
                           channel=channel, beta=2.0, seed=seed)
        same = run_episode(Strategy.NO_EQUALIZATION, lang_src, lang_src,
                           channel=channel, beta=2.0, seed=seed)
        assert (same.length, same.success) == (base.length, base.success)


def test_beta_zero_makes_strategies_indistinguishable(lang_src, lang_tgt, codebook):
    # The uniform decoder consumes one draw per step regardless of the
    # received symbol, so common random numbers force equal trajectories.
    channel = ChannelConfig(3.0)
    for seed in range(20):
        lengths = set()
        for strategy in Strategy:
            record = run_episode(strategy, lang_src, lang_tgt, channel=channel,
                                 beta=0.0, seed=seed, codebook=codebook)
            lengths.add((record.length, record.success))
        assert len(lengths) == 1


def test_mismatched_pair_without_equalization_loops(lang_src, lang_tgt):
    record = run_episode(
        Strategy.NO_EQUALIZATION, lang_src, lang_tgt,
        channel=ChannelConfig(math.inf), beta=math.inf,
        start=Observation((0, 0), (4, 4)),
    )
    assert record.length == lang_src.grid.max_steps
    assert not record.success


def test_equalized_noiseless_matches_grounded(lang_src, lang_tgt, codebook):
    channel = ChannelConfig(math.inf)
    for start in all_observations(lang_src.grid)[::17]:
        grounded = run_episode(Strategy.TARGET_GROUNDED, lang_src, lang_tgt,
                               channel=channel, beta=math.inf, start=start)
        equalized = run_episode(Strategy.SM_EQUALIZED, lang_src, lang_tgt,
                                channel=channel, beta=math.inf, start=start,
                                codebook=codebook)
        assert equalized.length == grounded.length


def test_sample_start_consumes_two_draws(grid):
    rng = CountingRandom(0)
    obs = sample_start(rng, grid)
    assert rng.calls == 2
    assert not obs.terminal


def test_sample_start_is_valid_and_covers_grid(grid):
    rng = random.Random(1)
    treasures = set()
    for _ in range(2000):
        obs = sample_start(rng, grid)
        assert not obs.terminal
        assert 0 <= obs.agent[0] < 5 and 0 <= obs.agent[1] < 5
        assert 0 <= obs.treasure[0] < 5 and 0 <= obs.treasure[1] < 5
        treasures.add(obs.treasure)
    assert len(treasures) == 25


def test_run_episode_rejects_bad_wiring(lang_src, lang_tgt, codebook):
    channel = ChannelConfig(math.inf)
    policy = Policy("fixed", codebook=codebook, fixed=(0, 0))
    with pytest.raises(ValueError):
        run_episode(Strategy.SOURCE_GROUNDED, lang_src, lang_tgt,
                    channel=channel, beta=math.inf, policy=policy)
    with pytest.raises(ValueError):
        run_episode(Strategy.SM_EQUALIZED, lang_src, lang_tgt,
                    channel=channel, beta=math.inf)
    other = synthesize_language(GridConfig(width=4, height=4), 3)
    with pytest.raises(ValueError):
        run_episode(Strategy.NO_EQUALIZATION, lang_src, other,
                    channel=channel, beta=math.inf)


def test_run_episode_rejects_bad_starts(lang_src, lang_tgt):
    channel = ChannelConfig(math.inf)
    with pytest.raises(ValueError):
        run_episode(Strategy.SOURCE_GROUNDED, lang_src, lang_tgt,
                    channel=channel, beta=math.inf,
                    start=Observation((2, 2), (2, 2)))
    with pytest.raises(ValueError):
        run_episode(Strategy.SOURCE_GROUNDED, lang_src, lang_tgt,
                    channel=channel, beta=math.inf,
                    start=Observation((7, 0), (0, 0)))


def test_run_episode_step_callback(lang_src, lang_tgt):
    seen = []

    def on_step(index, obs, sent, received, action):
        seen.append((index, obs, sent, received, action))

    record = run_episode(Strategy.SOURCE_GROUNDED, lang_src, lang_tgt,
                         channel=ChannelConfig(math.inf), beta=math.inf,
                         start=Observation((0, 0), (3, 2)), on_step=on_step)
    assert len(seen) == record.length == 5
    assert [s[0] for s in seen] == [1, 2, 3, 4, 5]
    for _, obs, sent, received, action in seen:
        assert sent == received  # noiseless channel
        assert sent == lang_src.encode(obs)
        assert 0 <= int(action) < 4


def test_make_policy(lang_src, lang_tgt, codebook):
    assert make_policy(Strategy.NO_EQUALIZATION, lang_src, lang_tgt, codebook) is None
    assert make_policy(Strategy.SOURCE_GROUNDED, lang_src, lang_tgt, None) is None
    sm = make_policy(Strategy.SM_EQUALIZED, lang_src, lang_tgt, codebook)
    assert sm.kind == "sm"
    em = make_policy(Strategy.EM_EQUALIZED, lang_src, lang_tgt, codebook, "oracle")
    assert em.kind == "em" and em.q_source == "oracle"
    with pytest.raises(ValueError):
        make_policy(Strategy.SM_EQUALIZED, lang_src, lang_tgt, None)


def test_sweep_rows_match_direct_episode_replay(grid):
    cfg = SweepConfig(source_seed=2, target_seed=3, eval_seed=9,
                      snr_grid=(5.0,), episodes_per_point=40,
                      strategies=(Strategy.TARGET_GROUNDED,))
    row = sweep_snr(cfg)[0]
    src, tgt = prepare_languages(cfg)
    lengths = []
    successes = 0
    for ep in range(40):
        seed = derive_seed(9, "snr", 0, ep)
        start = sample_start(random.Random(derive_seed(9, "snr", "start", 0, ep)), grid)
        record = run_episode(Strategy.TARGET_GROUNDED, src, tgt,
                             channel=ChannelConfig(5.0), beta=math.inf,
                             seed=seed, start=start)
        lengths.append(record.length)
        successes += record.success
    mean = sum(lengths) / 40
    var = sum((v - mean) ** 2 for v in lengths) / 39
    assert row.mean_length == mean
    assert row.std_length == math.sqrt(var)
    assert row.stderr_length == math.sqrt(var) / math.sqrt(40)
    assert row.success_rate == successes / 40
    assert row.episodes == 40
    assert row.strategy == "target_grounded"
    assert row.snr_db == 5.0 and row.beta == math.inf


def test_sweep_is_deterministic_and_worker_invariant():
    cfg = SweepConfig(snr_grid=(0.0, math.inf), episodes_per_point=25,
                      strategies=GROUNDED_ONLY)
    first = sweep_snr(cfg, workers=1)
    second = sweep_snr(cfg, workers=1)
    parallel = sweep_snr(cfg, workers=2)
    assert rows_to_csv_text(first) == rows_to_csv_text(second)
    assert rows_to_csv_text(first) == rows_to_csv_text(parallel)


def test_sweep_rows_ordered_strategy_major():
    cfg = SweepConfig(snr_grid=(0.0, 10.0), episodes_per_point=5,
                      strategies=(Strategy.SOURCE_GROUNDED, Strategy.TARGET_GROUNDED))
    rows = sweep_snr(cfg)
    assert [(r.strategy, r.snr_db) for r in rows] == [
        ("source_grounded", 0.0), ("source_grounded", 10.0),
        ("target_grounded", 0.0), ("target_grounded", 10.0),
    ]


def test_sweep_beta_holds_snr_fixed():
    cfg = SweepConfig(beta_grid=(0.0, math.inf), snr=7.0, episodes_per_point=5,
                      strategies=(Strategy.SOURCE_GROUNDED,))
    rows = sweep_beta(cfg)
    assert [r.beta for r in rows] == [0.0, math.inf]
    assert all(r.snr_db == 7.0 for r in rows)


def test_sweep_validates_inputs():
    with pytest.raises(ValueError):
        sweep_snr(SweepConfig(snr_grid=()))
    with pytest.raises(ValueError):
        sweep_snr(SweepConfig(snr_grid=(1.0,), episodes_per_point=0))


def test_perturbation_applies_to_source_only(grid):
    cfg = SweepConfig(source_seed=2, target_seed=3, perturb_encoder=0.1)
    src, tgt = prepare_languages(cfg)
    clean = synthesize_language(grid, 2)
    assert src.encoder != clean.encoder
    assert tgt.encoder == synthesize_language(grid, 3).encoder


def test_csv_text_format():
    cfg = SweepConfig(snr_grid=(0.0, math.inf), episodes_per_point=5,
                      strategies=(Strategy.SOURCE_GROUNDED,))
    text = rows_to_csv_text(sweep_snr(cfg))
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert lines[2].startswith("source_grounded,inf,inf,5,")
    for line in lines[1:]:
        fields = line.split(",")
        assert len(fields) == 8
        float(fields[4])  # mean parses back


def test_write_rows_csv(tmp_path):
    cfg = SweepConfig(snr_grid=(3.0,), episodes_per_point=4,
                      strategies=(Strategy.TARGET_GROUNDED,))
    rows = sweep_snr(cfg)
    path = tmp_path / "rows.csv"
    write_rows_csv(rows, str(path))
    assert path.read_text() == rows_to_csv_text(rows)


def test_parse_float():
    assert parse_float("inf") == math.inf
    assert parse_float("INF") == math.inf
    assert parse_float("-2.5") == -2.5
    assert parse_float(3) == 3.0
    with pytest.raises(ValueError):
        parse_float("nan")
    with pytest.raises(ValueError):
        parse_float("three")


def test_sweep_config_from_dict_overrides():
    cfg = sweep_config_from_dict(
        {
            "grid": {"width": 4, "height": 6},
            "source_seed": 7,
            "snr_grid": [0, "inf"],
            "strategies": ["source_grounded", "sm_equalized"],
            "q_source": "oracle",
            "clip": False,
            "episodes_per_point": 12,
            "output_path": "out.csv",
        }
    )
    assert cfg.grid == GridConfig(width=4, height=6)
    assert cfg.source_seed == 7
    assert cfg.target_seed == 2  # untouched default
    assert cfg.snr_grid == (0.0, math.inf)
    assert cfg.strategies == (Strategy.SOURCE_GROUNDED, Strategy.SM_EQUALIZED)
    assert cfg.q_source == "oracle"
    assert cfg.clip is False
    assert cfg.episodes_per_point == 12
    assert cfg.output_path == "out.csv"


def test_sweep_config_from_dict_base_and_errors():
    base = SweepConfig(eval_seed=5)
    cfg = sweep_config_from_dict({"beta": "inf"}, base=base)
    assert cfg.eval_seed == 5 and cfg.beta == math.inf
    with pytest.raises(ValueError, match="unknown config fields"):
        sweep_config_from_dict({"episodes": 3})
    with pytest.raises(ValueError, match="q_source"):
        sweep_config_from_dict({"q_source": "exact"})
    with pytest.raises(ValueError):
        sweep_config_from_dict({"strategies": ["bogus"]})


def test_strategy_enum_round_trip():
    assert Strategy("sm_equalized") is Strategy.SM_EQUALIZED
    assert Strategy.SM_EQUALIZED.value == "sm_equalized"
    assert {s.value for s in Strategy} == {
        "no_equalization", "source_grounded", "target_grounded",
        "sm_equalized", "em_equalized",
    }
