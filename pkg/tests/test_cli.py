import json

import pytest

from seggloss.cli import main
from seggloss.decoding import read_predictions
from seggloss.igt import DataSplit, load_split, word_example, write_split
from conftest import DEMO_FIXTURES, DEMO_PREPARED

IGT_TEXT = """\
\\t gubda salin
\\m gub-da sal-in
\\g work-PST plow-INF
\\l He worked to plow.

\\t tarhida qachun gubin
\\m tarh-ida qachu-in gub-in
\\g run-PST take-INF work-INF
\\l Running to take work.

\\t salda tarhin
\\m sal-da tarh-in
\\g plow-PST run-INF
\\l He plowed to run.

\\t qachuda salin gubda
\\m qachu-da sal-in gub-da
\\g take-PST plow-INF work-PST
\\l Taking to plow work.
"""

TINY_FLAGS = [
    "--encoder-layers", "1",
    "--decoder-layers", "1",
    "--attention-heads", "2",
    "--embedding-dim", "16",
    "--hidden-dim", "32",
    "--dropout", "0.0",
    "--attention-dropout", "0.0",
    "--max-positions", "32",
]


@pytest.fixture
def prepared(tmp_path):
    corpus = tmp_path / "corpus.igt"
    corpus.write_text(IGT_TEXT, encoding="utf-8")
    out = tmp_path / "prepared"
    code = main(
        ["prepare-data", "--input", str(corpus), "--language", "tst", "--out-dir", str(out)]
    )
    assert code == 0
    return out


class TestPrepareData:
    def test_writes_split_files(self, prepared, capsys):
        split, manifest = load_split(prepared / "tst")
        assert manifest["language"] == "tst"
        total = len(split.train) + len(split.dev) + len(split.test)
        assert total == 8  # unique triples; block 4 repeats gubda and salin
        assert len(split.train) == 4  # floor(0.6 * 8)

    def test_missing_input_fails(self, tmp_path):
        code = main(
            ["prepare-data", "--input", str(tmp_path / "no.igt"), "--language", "x",
             "--out-dir", str(tmp_path)]
        )
        assert code == 1


class TestTrainAndEvaluate:
    def test_train_then_evaluate_checkpoint(self, prepared, tmp_path, capsys):
        checkpoint = tmp_path / "model.pt"
        log = tmp_path / "log.jsonl"
        code = main(
            ["train", "--data-dir", str(prepared), "--language", "tst",
             "--checkpoint", str(checkpoint), "--log", str(log),
             "--epochs", "2", "--batch-size", "64", "--beam-width", "1", "--quiet",
             *TINY_FLAGS]
        )
        assert code == 0
        assert checkpoint.exists()
        assert len(log.read_text().splitlines()) == 2
        out = capsys.readouterr().out
        assert "best epoch" in out

        predictions_path = tmp_path / "preds.tsv"
        code = main(
            ["evaluate", "--checkpoint", str(checkpoint), "--data-dir", str(prepared),
             "--language", "tst", "--split", "test", "--beam-width", "1",
             "--write-predictions", str(predictions_path)]
        )
        assert code == 0
        scores = json.loads(capsys.readouterr().out)
        assert {"word_accuracy", "morpheme_f1", "edit_distance_sum"} <= set(scores)
        rows = read_predictions(predictions_path)
        split, _ = load_split(prepared / "tst")
        assert len(rows) == len(split.test)

    def test_evaluate_prediction_file_against_gold(self, tmp_path, capsys):
        gold = tmp_path / "gold.tsv"
        pred = tmp_path / "pred.tsv"
        gold.write_text("gubda\tgub-da\twork-PST\nsalin\tsal-in\tplow-INF\n", encoding="utf-8")
        pred.write_text("gubda\tgub-da\twork-PST\nsalin\tsa-lin\tplow-INF\n", encoding="utf-8")
        code = main(["evaluate", "--predictions", str(pred), "--gold", str(gold)])
        assert code == 0
        scores = json.loads(capsys.readouterr().out)
        assert scores["word_accuracy"] == 50.0
        assert scores["n_words"] == 2

    def test_evaluate_length_mismatch_fails(self, tmp_path, capsys):
        gold = tmp_path / "gold.tsv"
        pred = tmp_path / "pred.tsv"
        gold.write_text("a\ta\tx\nb\tb\ty\n", encoding="utf-8")
        pred.write_text("a\ta\tx\n", encoding="utf-8")
        assert main(["evaluate", "--predictions", str(pred), "--gold", str(gold)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_evaluate_needs_some_input(self, capsys):
        assert main(["evaluate"]) == 1

    def test_config_file_fills_defaults_but_flags_win(self, prepared, tmp_path, monkeypatch):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"epochs": 1, "embedding_dim": 16}), encoding="utf-8")
        checkpoint = tmp_path / "m.pt"
        argv = [
            "train", "--data-dir", str(prepared), "--language", "tst",
            "--checkpoint", str(checkpoint), "--config", str(config),
            "--epochs", "2", "--batch-size", "64", "--beam-width", "1", "--quiet",
            *TINY_FLAGS,
        ]
        monkeypatch.setattr("sys.argv", ["seggloss", *argv])
        assert main(argv) == 0
        from seggloss.model import load_checkpoint

        _, _, meta = load_checkpoint(checkpoint)
        assert meta["epochs_run"] == 2  # explicit --epochs beats the config file

    def test_unknown_config_key_fails(self, prepared, tmp_path, monkeypatch):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"no_such_flag": 1}), encoding="utf-8")
        argv = [
            "train", "--data-dir", str(prepared), "--language", "tst",
            "--config", str(config), "--epochs", "1", "--quiet", *TINY_FLAGS,
        ]
        monkeypatch.setattr("sys.argv", ["seggloss", *argv])
        assert main(argv) == 1


class TestGenerateSynthetic:
    def test_fixture_generation_to_cache(self, tmp_path, capsys):
        cache = tmp_path / "synth.jsonl"
        code = main(
            ["generate-synthetic", "--data-dir", str(DEMO_PREPARED), "--language", "kel",
             "--budget", "50", "--cache", str(cache), "--fixtures", str(DEMO_FIXTURES),
             "--words-per-prompt", "8", "--max-stems", "15"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "accepted" in out
        assert cache.exists()
        lines = cache.read_text().splitlines()
        assert lines
        record = json.loads(lines[0])
        assert {"surface", "segmentation", "gloss", "stem", "status", "raw_response"} <= set(record)

    def test_fixture_params_fill_unset_plan_flags(self, tmp_path, capsys):
        # no --words-per-prompt / --max-stems: params.json next to the
        # fixtures must supply them, or no prompt hash would resolve
        cache = tmp_path / "synth.jsonl"
        code = main(
            ["generate-synthetic", "--data-dir", str(DEMO_PREPARED), "--language", "kel",
             "--budget", "50", "--cache", str(cache), "--fixtures", str(DEMO_FIXTURES)]
        )
        assert code == 0
        assert "accepted: 50" in capsys.readouterr().out

    def test_live_requires_endpoint_and_model(self, capsys):
        code = main(
            ["generate-synthetic", "--data-dir", str(DEMO_PREPARED), "--language", "kel",
             "--budget", "5", "--cache", "/tmp/nope.jsonl"]
        )
        assert code == 1
        assert "endpoint" in capsys.readouterr().err


class TestSweepLambda:
    def test_two_point_sweep(self, prepared, tmp_path, capsys):
        out = tmp_path / "sweep.json"
        code = main(
            ["sweep-lambda", "--data-dir", str(prepared), "--language", "tst",
             "--weights", "0.9", "--include-single-task", "--out", str(out),
             "--epochs", "1", "--batch-size", "64", "--beam-width", "1", *TINY_FLAGS]
        )
        assert code == 0
        rows = json.loads(out.read_text())
        assert [(r["seg_loss_weight"], r["mode"]) for r in rows] == [
            (0.9, "multitask"),
            (1.0, "single_task"),
        ]


class TestHarnessCommands:
    def test_run_and_report(self, prepared, tmp_path, capsys):
        results = tmp_path / "results"
        code = main(
            ["run", "--data-dir", str(prepared), "--results-dir", str(results),
             "--language", "tst", "--epochs", "1", "--batch-size", "64",
             "--beam-width", "1", "--quiet", *TINY_FLAGS]
        )
        assert code == 0
        row = json.loads(capsys.readouterr().out)
        assert row["status"] == "ok"

        code = main(["report", "--results-dir", str(results), "--out", str(tmp_path / "report.txt")])
        assert code == 0
        assert "tst" in capsys.readouterr().out
        assert (tmp_path / "report.txt").exists()

    def test_learning_curve_command(self, prepared, tmp_path, capsys):
        results = tmp_path / "results"
        code = main(
            ["learning-curve", "--data-dir", str(prepared), "--results-dir", str(results),
             "--language", "tst", "--fractions", "0.5,1.0", "--modes", "multitask",
             "--epochs", "1", "--batch-size", "64", "--beam-width", "1", *TINY_FLAGS]
        )
        assert code == 0
        assert (results / "learning_curve_tst.csv").exists()
        out = capsys.readouterr().out
        assert "fraction 0.5" in out and "fraction 1.0" in out

    def test_saturation_grid_command(self, prepared, tmp_path, capsys):
        from seggloss.synth import ACCEPTED, SyntheticExample, append_cache

        cache = tmp_path / "synth.jsonl"
        append_cache(
            cache,
            [
                SyntheticExample(f"zz{i}da", f"zz{i}-da", "thing-PST", "zz", ACCEPTED, "raw")
                for i in range(6)
            ],
        )
        results = tmp_path / "results"
        code = main(
            ["saturation-grid", "--data-dir", str(prepared), "--results-dir", str(results),
             "--languages", "tst", "--ratios", "0,0.5", "--modes", "multitask",
             "--synth-cache", f"tst={cache}",
             "--epochs", "1", "--batch-size", "64", "--beam-width", "1", *TINY_FLAGS]
        )
        assert code == 0
        assert (results / "saturation_grid.csv").exists()
        out = capsys.readouterr().out
        assert "ratio 0.5" in out

    def test_bad_synth_cache_syntax(self, prepared, tmp_path, capsys):
        code = main(
            ["saturation-grid", "--data-dir", str(prepared), "--results-dir", str(tmp_path),
             "--languages", "tst", "--ratios", "0", "--modes", "multitask",
             "--synth-cache", "missing-equals-sign",
             "--epochs", "1", *TINY_FLAGS]
        )
        assert code == 1

    def test_report_on_empty_ledger_fails(self, tmp_path):
        assert main(["report", "--results-dir", str(tmp_path)]) == 1
