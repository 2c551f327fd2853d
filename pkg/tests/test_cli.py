import json
from pathlib import Path

from relsub.cli import main

FIXTURE = Path(__file__).parent / "fixtures" / "conceptnet_fixture.tsv"


def write_config(tmp_path, **overrides):
    raw = {
        "input_path": str(FIXTURE),
        "sample_size": 1000,
        "target_relations": ["/r/synthetic"],
        "k": 3,
        "restarts": 2,
        "seed": 1,
        "output_dir": str(tmp_path / "out"),
        "train": {"dim": 8, "epochs": 4},
        "projection_method": "pca",
    }
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


def test_full_pipeline_exits_zero(tmp_path, capsys):
    config = write_config(tmp_path)
    assert main(["pipeline", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert "[train] done" in out
    assert "[report] done" in out


def test_usage_error_exits_two(tmp_path, capsys):
    config = write_config(tmp_path, projection_method="umap")
    assert main(["project", "--config", str(config)]) == 2
    assert "error:" in capsys.readouterr().err


def test_missing_config_file_exits_two(tmp_path):
    assert main(["stats", "--config", str(tmp_path / "nope.json")]) == 2


def test_dependency_error_exits_three(tmp_path, capsys):
    config = write_config(tmp_path)
    assert main(["cluster", "--config", str(config)]) == 3
    assert "missing prerequisite artifact" in capsys.readouterr().err


def test_data_error_exits_four(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("only\ttwo\n")
    config = write_config(tmp_path, input_path=str(bad))
    assert main(["ingest", "--config", str(config)]) == 4
    assert "line 1" in capsys.readouterr().err


def test_flags_override_config(tmp_path):
    config = write_config(tmp_path)
    out_dir = tmp_path / "other"
    assert main(["ingest", "--config", str(config), "--out", str(out_dir)]) == 0
    assert (out_dir / "graph" / "full" / "triples.tsv").is_file()


def test_synth_then_stats(tmp_path):
    out = str(tmp_path / "out")
    assert main(["synth", "--out", out, "--seed", "3", "--sub-relations", "2",
                 "--per-sub", "30", "--head-pool", "60", "--tail-pool", "2"]) == 0
    assert main(["stats", "--out", out]) == 0
    stats = json.loads((Path(out) / "graph" / "stats.json").read_text())
    assert stats["num_triples"] == 60


def test_env_var_supplies_output_root(tmp_path, monkeypatch):
    out = tmp_path / "envout"
    monkeypatch.setenv("RELSUB_OUT", str(out))
    assert main(["synth", "--seed", "1", "--sub-relations", "2", "--per-sub", "10",
                 "--head-pool", "20", "--tail-pool", "2"]) == 0
    assert (out / "graph" / "sample" / "triples.tsv").is_file()


def test_skip_bad_lines_flag(tmp_path):
    dump = tmp_path / "dump.tsv"
    good = FIXTURE.read_text().splitlines()[:5]
    dump.write_text("\n".join(good + ["broken line"]) + "\n")
    config = write_config(tmp_path, input_path=str(dump))
    assert main(["ingest", "--config", str(config)]) == 4
    assert main(["ingest", "--config", str(config), "--skip-bad-lines"]) == 0
