"""Command-line interface.

Subcommands: synth-lang, metrics, codebook, episode, sweep-snr, sweep-beta.
Numeric flags accept the literal `inf`.  Sweep commands read an optional
JSON config mirroring the sweep settings, with explicit flags taking
precedence, and render a figure next to the CSV unless asked not to.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .channel import ChannelConfig
from .equalizer import Policy
from .gridworld import GridConfig
from .harness import (
    Strategy,
    SweepConfig,
    parse_float,
    run_episode,
    rows_to_csv_text,
    sweep_beta,
    sweep_config_from_dict,
    sweep_snr,
)
from .language import (
    DEFAULT_JITTER_RADIUS,
    load_language,
    perturb_language,
    save_language,
    synthesize_language,
)
from .mismatch import mismatch_report
from .transport import CodebookParams, build_codebook, save_codebook

_PER_OBS_HEADER = (
    "agent_col,agent_row,treasure_col,treasure_row,"
    "source_atom,target_atom,interpreted_action,q_plus_ratio"
)


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ValueError(f"bad grid {text!r}, expected WxH") from None


def _parse_strategies(text: str) -> tuple[Strategy, ...]:
    try:
        return tuple(Strategy(tok.strip()) for tok in text.split(","))
    except ValueError:
        valid = ",".join(s.value for s in Strategy)
        raise ValueError(f"bad strategy list {text!r}; valid tokens: {valid}") from None


def _parse_policy(text: str) -> tuple[str, tuple[int, int] | None]:
    if text in ("sm", "em", "none"):
        return text, None
    if text.startswith("fixed:"):
        parts = text[len("fixed:"):].split(",")
        if len(parts) == 2:
            return "fixed", (int(parts[0]), int(parts[1]))
    raise ValueError(f"bad policy {text!r}, expected sm|em|none|fixed:i,j")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0,
                        help="master seed for this command")
    parser.add_argument("--grid", default="5x5", help="grid size as WxH")
    parser.add_argument("--out", default=None, help="output file path")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semeq",
        description="Semantic channel equalization between mismatched languages",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-lang", help="synthesize a language and write it as JSON")
    _common_flags(p)
    p.add_argument("--jitter", type=parse_float, default=DEFAULT_JITTER_RADIUS,
                   help="encoder jitter radius")
    p.add_argument("--perturb-encoder", type=parse_float, default=0.0,
                   help="fraction of encoder entries flipped to a wrong atom")

    p = sub.add_parser("metrics", help="mismatch metrics for a language pair")
    _common_flags(p)
    p.add_argument("--src", required=True, help="source language JSON")
    p.add_argument("--tgt", required=True, help="target language JSON")
    p.add_argument("--per-obs", default=None, metavar="PATH",
                   help="also write the per-observation breakdown CSV here")

    p = sub.add_parser("codebook", help="fit the atom-pair map codebook for a language pair")
    _common_flags(p)
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--epsilon", type=parse_float, default=None,
                   help="entropic regularization (default: scale-derived)")
    p.add_argument("--ridge", type=parse_float, default=1e-4)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=1000)

    p = sub.add_parser("episode", help="run one episode with a verbose trace")
    _common_flags(p)
    p.add_argument("--source-seed", type=int, default=1)
    p.add_argument("--target-seed", type=int, default=2)
    p.add_argument("--jitter", type=parse_float, default=DEFAULT_JITTER_RADIUS)
    p.add_argument("--strategy", default=Strategy.NO_EQUALIZATION.value,
                   choices=[s.value for s in Strategy])
    p.add_argument("--policy", default=None,
                   help="override the transform selector: sm|em|none|fixed:i,j")
    p.add_argument("--snr", type=parse_float, default=float("inf"))
    p.add_argument("--beta", type=parse_float, default=float("inf"))
    p.add_argument("--q-source", choices=("decoder", "oracle"), default="decoder")
    p.add_argument("--no-clip", action="store_true")
    p.add_argument("--perturb-encoder", type=parse_float, default=0.0)

    for name, axis_help in (("sweep-snr", "comma list of SNR values in dB"),
                            ("sweep-beta", "comma list of beta values")):
        p = sub.add_parser(name, help=f"episode-length sweep ({name.split('-')[1]} axis)")
        _common_flags(p)
        p.add_argument("--config", default=None, help="JSON config mirroring sweep settings")
        p.add_argument("--source-seed", type=int, default=None)
        p.add_argument("--target-seed", type=int, default=None)
        p.add_argument("--jitter", type=parse_float, default=None)
        p.add_argument("--episodes", type=int, default=None)
        p.add_argument("--strategies", default=None, help="comma list of strategy names")
        p.add_argument("--q-source", choices=("decoder", "oracle"), default=None)
        p.add_argument("--no-clip", action="store_true")
        p.add_argument("--perturb-encoder", type=parse_float, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--no-plot", action="store_true",
                       help="skip rendering the figure next to the CSV")
        if name == "sweep-snr":
            p.add_argument("--snr", default=None, help=axis_help)
            p.add_argument("--beta", type=parse_float, default=None,
                           help="fixed decoder inverse temperature")
        else:
            p.add_argument("--betas", default=None, help=axis_help)
            p.add_argument("--snr", type=parse_float, default=None,
                           help="fixed SNR in dB")
    return parser


def _cmd_synth_lang(args) -> int:
    if args.out is None:
        raise ValueError("synth-lang requires --out")
    w, h = _parse_grid(args.grid)
    lang = synthesize_language(GridConfig(width=w, height=h), args.seed, args.jitter)
    if args.perturb_encoder > 0.0:
        lang = perturb_language(lang, args.perturb_encoder, args.seed)
    save_language(lang, args.out)
    return 0


def _cmd_metrics(args) -> int:
    src = load_language(args.src)
    tgt = load_language(args.tgt)
    report = mismatch_report(src, tgt, per_observation=args.per_obs is not None)
    text = json.dumps({"sm": report.sm, "em": report.em})
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)
    if args.per_obs:
        lines = [_PER_OBS_HEADER]
        for row in report.per_observation:
            (ac, ar), (tc, tr) = row.obs.agent, row.obs.treasure
            lines.append(
                f"{ac},{ar},{tc},{tr},{row.source_atom},{row.target_atom},"
                f"{row.interpreted_action},{row.q_plus_ratio!r}"
            )
        with open(args.per_obs, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
    return 0


def _cmd_codebook(args) -> int:
    if args.out is None:
        raise ValueError("codebook requires --out")
    src = load_language(args.src)
    tgt = load_language(args.tgt)
    params = CodebookParams(epsilon=args.epsilon, ridge=args.ridge,
                            n_rounds=args.rounds, max_iter=args.max_iter)
    save_codebook(build_codebook(src, tgt, params), args.out)
    return 0


def _cmd_episode(args) -> int:
    w, h = _parse_grid(args.grid)
    grid = GridConfig(width=w, height=h)
    src = synthesize_language(grid, args.source_seed, args.jitter)
    if args.perturb_encoder > 0.0:
        src = perturb_language(src, args.perturb_encoder, args.source_seed)
    tgt = synthesize_language(grid, args.target_seed, args.jitter)

    strategy = Strategy(args.strategy)
    policy = None
    if args.policy is not None:
        kind, fixed = _parse_policy(args.policy)
        if kind == "none":
            strategy = Strategy.NO_EQUALIZATION
        else:
            codebook = build_codebook(src, tgt)
            if kind == "sm":
                strategy = Strategy.SM_EQUALIZED
                policy = Policy("sm", codebook=codebook, source=src)
            elif kind == "em":
                strategy = Strategy.EM_EQUALIZED
                policy = Policy("em", codebook=codebook, source=src, target=tgt,
                                q_source=args.q_source)
            else:
                strategy = Strategy.NO_EQUALIZATION
                policy = Policy("fixed", codebook=codebook, fixed=fixed)
    codebook = None
    if policy is None and strategy in (Strategy.SM_EQUALIZED, Strategy.EM_EQUALIZED):
        codebook = build_codebook(src, tgt)

    trace: list[str] = []

    def on_step(index, obs, sent, received, action):
        trace.append(
            f"step={index} agent={obs.agent} treasure={obs.treasure} "
            f"sent=({sent[0]:.4f},{sent[1]:.4f}) "
            f"received=({received[0]:.4f},{received[1]:.4f}) action={action.name}"
        )

    record = run_episode(
        strategy, src, tgt, channel=ChannelConfig(args.snr), beta=args.beta,
        seed=args.seed, codebook=codebook, policy=policy,
        clip=not args.no_clip, q_source=args.q_source, on_step=on_step,
    )
    print(f"# strategy={record.strategy.value} snr_db={record.snr_db} "
          f"beta={record.beta} seed={record.seed}")
    for line in trace:
        print(line)
    print(f"length={record.length} success={record.success}")
    return 0


def _sweep_overrides(args, axis: str) -> dict:
    overrides: dict = {}
    if args.source_seed is not None:
        overrides["source_seed"] = args.source_seed
    if args.target_seed is not None:
        overrides["target_seed"] = args.target_seed
    overrides["eval_seed"] = args.seed
    if args.jitter is not None:
        overrides["jitter_radius"] = args.jitter
    if args.episodes is not None:
        overrides["episodes_per_point"] = args.episodes
    if args.strategies is not None:
        overrides["strategies"] = [s.value for s in _parse_strategies(args.strategies)]
    if args.q_source is not None:
        overrides["q_source"] = args.q_source
    if args.no_clip:
        overrides["clip"] = False
    if args.perturb_encoder is not None:
        overrides["perturb_encoder"] = args.perturb_encoder
    if axis == "snr":
        if args.snr is not None:
            overrides["snr_grid"] = [parse_float(v) for v in str(args.snr).split(",")]
        if args.beta is not None:
            overrides["beta"] = args.beta
    else:
        if args.betas is not None:
            overrides["beta_grid"] = [parse_float(v) for v in args.betas.split(",")]
        if args.snr is not None:
            overrides["snr"] = args.snr
    if args.out is not None:
        overrides["output_path"] = args.out
    return overrides


def _cmd_sweep(args, axis: str) -> int:
    cfg = SweepConfig()
    if getattr(args, "grid", None) is not None and args.grid != "5x5":
        w, h = _parse_grid(args.grid)
        cfg = sweep_config_from_dict({"grid": {"width": w, "height": h}}, base=cfg)
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as f:
            cfg = sweep_config_from_dict(json.load(f), base=cfg)
    cfg = sweep_config_from_dict(_sweep_overrides(args, axis), base=cfg)

    if axis == "snr":
        rows = sweep_snr(cfg, workers=args.workers)
    else:
        rows = sweep_beta(cfg, workers=args.workers)
    text = rows_to_csv_text(rows)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        if not args.no_plot:
            from .plots import render_sweep_figure

            figure_path = os.path.splitext(cfg.output_path)[0] + ".png"
            x_field = "snr_db" if axis == "snr" else "beta"
            render_sweep_figure(rows, x_field, figure_path)
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "synth-lang": _cmd_synth_lang,
        "metrics": _cmd_metrics,
        "codebook": _cmd_codebook,
        "episode": _cmd_episode,
    }
    try:
        if args.command in handlers:
            return handlers[args.command](args)
        if args.command == "sweep-snr":
            return _cmd_sweep(args, "snr")
        if args.command == "sweep-beta":
            return _cmd_sweep(args, "beta")
        raise ValueError(f"unknown command {args.command!r}")
    except (ValueError, OSError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
