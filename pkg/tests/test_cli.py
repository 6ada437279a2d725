import json
import math

import pytest

from semeq.cli import main
from semeq.harness import CSV_HEADER
from semeq.language import load_language, synthesize_language
from semeq.transport import load_codebook

SMALL = "3x3"


def synth(tmp_path, name, seed, grid=SMALL, extra=()):
    path = tmp_path / name
    rc = main(["synth-lang", "--seed", str(seed), "--grid", grid,
               "--out", str(path), *extra])
    assert rc == 0
    return path


def test_synth_lang_writes_deterministic_language(tmp_path):
    p1 = synth(tmp_path, "a.json", 5)
    p2 = synth(tmp_path, "b.json", 5)
    assert p1.read_bytes() == p2.read_bytes()
    lang = load_language(str(p1))
    assert lang.seed == 5
    assert lang.grid.width == 3 and lang.grid.height == 3


def test_synth_lang_perturbed(tmp_path):
    clean = load_language(str(synth(tmp_path, "c.json", 5)))
    noisy = load_language(
        str(synth(tmp_path, "d.json", 5, extra=("--perturb-encoder", "0.5")))
    )
    differing = [o for o in clean.encoder if clean.encoder[o] != noisy.encoder[o]]
    assert len(differing) == 36  # half of the 72 observations on 3x3


def test_synth_lang_requires_out(tmp_path, capsys):
    assert main(["synth-lang", "--seed", "1"]) == 1
    assert "error:" in capsys.readouterr().err


def test_metrics_stdout_and_files(tmp_path, capsys):
    src = synth(tmp_path, "src.json", 1)
    tgt = synth(tmp_path, "tgt.json", 2)
    assert main(["metrics", "--src", str(src), "--tgt", str(tgt)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) == {"sm", "em"}
    assert 0.0 <= payload["sm"] <= 1.0 and 0.0 <= payload["em"] <= 1.0

    out = tmp_path / "metrics.json"
    per_obs = tmp_path / "per_obs.csv"
    rc = main(["metrics", "--src", str(src), "--tgt", str(tgt),
               "--out", str(out), "--per-obs", str(per_obs)])
    assert rc == 0
    assert json.loads(out.read_text()) == payload
    lines = per_obs.read_text().strip().split("\n")
    assert lines[0] == ("agent_col,agent_row,treasure_col,treasure_row,"
                        "source_atom,target_atom,interpreted_action,q_plus_ratio")
    assert len(lines) == 73  # header plus one row per 3x3 observation


def test_metrics_self_pair_is_zero(tmp_path, capsys):
    src = synth(tmp_path, "src.json", 1)
    assert main(["metrics", "--src", str(src), "--tgt", str(src)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload == {"sm": 0.0, "em": 0.0}


def test_metrics_missing_file_errors(tmp_path, capsys):
    src = synth(tmp_path, "src.json", 1)
    assert main(["metrics", "--src", str(src), "--tgt", str(tmp_path / "no.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_codebook_command(tmp_path):
    src = synth(tmp_path, "src.json", 1)
    tgt = synth(tmp_path, "tgt.json", 2)
    out = tmp_path / "codebook.json"
    rc = main(["codebook", "--src", str(src), "--tgt", str(tgt), "--out", str(out)])
    assert rc == 0
    book = load_codebook(str(out))
    assert len(book.maps) == 4
    assert book.source_seed == 1 and book.target_seed == 2


def test_episode_trace(capsys):
    rc = main(["episode", "--grid", SMALL, "--seed", "3",
               "--strategy", "source_grounded"])
    assert rc == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0].startswith("# strategy=source_grounded snr_db=inf beta=inf")
    assert out[-1].startswith("length=")
    length = int(out[-1].split()[0].split("=")[1])
    assert len(out) == length + 2
    assert all(line.startswith("step=") for line in out[1:-1])


def test_episode_is_deterministic(capsys):
    args = ["episode", "--grid", SMALL, "--seed", "11", "--snr", "5",
            "--beta", "2", "--strategy", "target_grounded"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first


def test_episode_policy_override(capsys):
    rc = main(["episode", "--grid", SMALL, "--seed", "3", "--policy", "fixed:0,0"])
    assert rc == 0
    header = capsys.readouterr().out.split("\n")[0]
    assert "strategy=no_equalization" in header
    rc = main(["episode", "--grid", SMALL, "--seed", "3", "--policy", "sm"])
    assert rc == 0
    header = capsys.readouterr().out.split("\n")[0]
    assert "strategy=sm_equalized" in header


def test_episode_bad_policy_errors(capsys):
    assert main(["episode", "--grid", SMALL, "--policy", "fixed:9"]) == 1
    assert "error:" in capsys.readouterr().err


def test_episode_bad_strategy_is_usage_error():
    with pytest.raises(SystemExit):
        main(["episode", "--strategy", "bogus"])


def sweep_args(out=None, extra=()):
    args = ["sweep-snr", "--grid", SMALL, "--episodes", "20",
            "--strategies", "source_grounded,target_grounded",
            "--snr", "0,inf", "--seed", "1", *extra]
    if out is not None:
        args += ["--out", str(out)]
    return args


def test_sweep_snr_stdout(capsys):
    assert main(sweep_args()) == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 5
    assert {line.split(",")[0] for line in lines[1:]} == {
        "source_grounded", "target_grounded"
    }


def test_sweep_snr_writes_csv_and_figure(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(sweep_args(out)) == 0
    assert out.exists()
    figure = tmp_path / "sweep.png"
    assert figure.exists()
    assert figure.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_sweep_outputs_are_byte_identical_across_runs_and_workers(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(sweep_args(a)) == 0
    assert main(sweep_args(b, extra=("--workers", "2"))) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_sweep_no_plot_skips_figure(tmp_path):
    out = tmp_path / "plain.csv"
    assert main(sweep_args(out, extra=("--no-plot",))) == 0
    assert out.exists()
    assert not (tmp_path / "plain.png").exists()


def test_sweep_beta_axis(capsys):
    rc = main(["sweep-beta", "--grid", SMALL, "--episodes", "10",
               "--strategies", "source_grounded", "--betas", "0,inf",
               "--snr", "inf"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert [line.split(",")[2] for line in lines[1:]] == ["0.0", "inf"]


def test_sweep_config_file_with_flag_precedence(tmp_path, capsys):
    config = tmp_path / "sweep.json"
    config.write_text(json.dumps({
        "grid": {"width": 3, "height": 3},
        "episodes_per_point": 6,
        "strategies": ["source_grounded"],
        "snr_grid": [0],
    }))
    rc = main(["sweep-snr", "--config", str(config), "--episodes", "4"])
    assert rc == 0
    lines = capsys.readouterr().out.strip().split("\n")
    assert lines[1].split(",")[3] == "4"  # CLI flag beats the config value


def test_sweep_bad_inputs(tmp_path, capsys):
    assert main(sweep_args(extra=("--strategies", "bogus"))) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["sweep-snr", "--grid", "5by5"]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["sweep-snr", "--config", str(tmp_path / "missing.json")]) == 1
    assert "error:" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"episodes": 3}))
    assert main(["sweep-snr", "--config", str(bad)]) == 1
    assert "unknown config fields" in capsys.readouterr().err


def test_module_entry_point():
    from semeq import cli

    assert cli.main is main
