import json

import pytest

from harshuffle.cli import main
from harshuffle.experiment import synth_spec_to_dict
from harshuffle.ingest import LABELS, load_stream
from tests.test_experiment import tiny_config, tiny_synth_spec


@pytest.fixture
def spec_file(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps(synth_spec_to_dict(tiny_synth_spec(duration=800, seed=3))))
    return p


def test_gen_data_emits_loadable_stream(tmp_path, spec_file, capsys):
    out = tmp_path / "w.csv"
    assert main(["gen-data", "--spec", str(spec_file), "--out", str(out)]) == 0
    stream = load_stream(out)
    assert len(stream) == 800
    assert "800 frames" in capsys.readouterr().out


def test_reorder_cli_round_trip(tmp_path, spec_file):
    src = tmp_path / "w.csv"
    main(["gen-data", "--spec", str(spec_file), "--out", str(src)])
    for strategy in ("rs", "as", "rdss"):
        out = tmp_path / f"{strategy}.csv"
        code = main(
            ["reorder", "--in", str(src), "--strategy", strategy, "--seed", "5",
             "--out", str(out)]
        )
        assert code == 0
        reordered = load_stream(out)
        assert len(reordered) == 800
        assert sorted(reordered.labels) == sorted(load_stream(src).labels)
    as_stream = load_stream(tmp_path / "as.csv")
    idx = [LABELS.index(int(op)) for op in as_stream.labels]
    assert idx == sorted(idx)


def test_eval_cli(tmp_path, capsys):
    truth = tmp_path / "truth.txt"
    pred = tmp_path / "pred.txt"
    truth.write_text("100\n300\n300\n8100\n")
    pred.write_text("100\n300\n100\n8100\n")
    assert main(["eval", "--pred", str(pred), "--truth", str(truth)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "accuracy,precision,recall,macro_f1"
    assert float(out[1].split(",")[0]) == 0.75


def test_eval_rejects_unknown_label(tmp_path, capsys):
    truth = tmp_path / "truth.txt"
    pred = tmp_path / "pred.txt"
    truth.write_text("100\n")
    pred.write_text("77\n")
    assert main(["eval", "--pred", str(pred), "--truth", str(truth)]) == 2
    assert "error" in capsys.readouterr().err


def test_run_cli_happy_path(tmp_path, capsys):
    cfg = tiny_config(tmp_path / "out", settings=("WDA",), seeds=(1,))
    from harshuffle.experiment import config_to_dict

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config_to_dict(cfg)))
    code = main(["run", "--config", str(cfg_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "WDA seed 1" in out
    assert (tmp_path / "out" / "summary.csv").exists()


def test_run_cli_overrides(tmp_path):
    cfg = tiny_config(tmp_path / "out", settings=("WDA", "ORIG-AS"), seeds=(1, 2))
    from harshuffle.experiment import config_to_dict

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config_to_dict(cfg)))
    out2 = tmp_path / "other"
    code = main(
        ["run", "--config", str(cfg_path), "--out", str(out2), "--seeds", "2",
         "--settings", "WDA"]
    )
    assert code == 0
    lines = (out2 / "results.csv").read_text().strip().splitlines()
    assert lines[1].startswith("WDA,2,")
    assert len(lines) == 2


def test_run_cli_config_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"data": {"paths": ["a", "b"]}, "bogus_key": 1}))
    assert main(["run", "--config", str(bad)]) == 2
    assert "bogus_key" in capsys.readouterr().err


def test_run_cli_cell_failure_exit_1(tmp_path, monkeypatch, capsys):
    import harshuffle.experiment as exp

    def explode(cfg, setting, seed, out_dir=None):
        raise RuntimeError("boom")

    monkeypatch.setattr(exp, "run_setting", explode)
    cfg = tiny_config(tmp_path / "out", settings=("WDA",), seeds=(1,))
    from harshuffle.experiment import config_to_dict

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config_to_dict(cfg)))
    assert main(["run", "--config", str(cfg_path)]) == 1
    assert "FAILED" in capsys.readouterr().out


def test_gen_data_bad_spec_exit_2(tmp_path, capsys):
    bad = tmp_path / "spec.json"
    bad.write_text(json.dumps({"waveforms": {}, "lengths": {}, "duration_frames": 0}))
    assert main(["gen-data", "--spec", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
