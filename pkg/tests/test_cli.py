"""End-to-end command-line behavior, including exit codes and replayability."""

import json

import pytest

from entpat.cli import main
from entpat.corpus import save_corpus

pytestmark = pytest.mark.usefixtures("tmp_path")


def run(capsys, *argv):
    """Invoke the CLI as a console script would and capture its streams."""
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def context_corpus_path(context_determined_corpus, tmp_path):
    path = tmp_path / "context.jsonl"
    save_corpus(context_determined_corpus, path)
    return path


class TestTopLevel:
    def test_help_exits_zero(self, capsys):
        code, out, _ = run(capsys, "--help")
        assert code == 0
        assert "Usage:" in out
        for name in ("stats", "mask", "build-cache", "train", "cv", "predict"):
            assert name in out

    def test_unknown_subcommand_exits_one(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 1
        assert "frobnicate" in err

    def test_unknown_flag_exits_one(self, capsys, liver_corpus_path):
        code, _, err = run(capsys, "stats", "--bogus")
        assert code == 1
        assert "--bogus" in err

    def test_internal_error_exits_two(self, capsys, monkeypatch, liver_corpus_path):
        import entpat.cli as cli_module

        def boom(path):
            raise RuntimeError("wires crossed")

        monkeypatch.setattr(cli_module, "load_corpus", boom)
        code, _, err = run(capsys, "stats", "--corpus", str(liver_corpus_path))
        assert code == 2
        assert "wires crossed" in err


class TestStats:
    def test_table_for_corpus(self, capsys, liver_corpus_path):
        code, out, _ = run(capsys, "stats", "--corpus", str(liver_corpus_path))
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 7
        assert lines[0].split() == ["FOOD", "5"]
        assert lines[1].split() == ["MED", "2"]
        assert lines[2].split() == ["DIS", "2"]
        assert lines[-1].split() == ["TOTAL", "9"]

    def test_missing_corpus_flag(self, capsys):
        code, _, err = run(capsys, "stats")
        assert code == 1
        assert "--corpus" in err

    def test_nonexistent_corpus_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "stats", "--corpus", str(tmp_path / "nope.jsonl"))
        assert code == 1

    def test_malformed_corpus_reports_line(self, capsys, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "1", "text": "x", "entities": []}\nnot json\n')
        code, _, err = run(capsys, "stats", "--corpus", str(bad))
        assert code == 1
        assert "line 2" in err


class TestMask:
    def test_contexts_as_json_lines(self, capsys, liver_corpus_path):
        code, out, _ = run(
            capsys, "mask", "--surface", "liver", "--corpus", str(liver_corpus_path)
        )
        assert code == 0
        entries = [json.loads(line) for line in out.strip().splitlines()]
        assert [e["statement_id"] for e in entries] == ["1-1", "1-2", "1-3"]
        for entry in entries:
            assert "[MASK]" in entry["masked_text"]
            assert "liver" not in entry["masked_text"].lower()
            assert entry["mask_count"] == 1

    def test_absent_surface_prints_nothing(self, capsys, liver_corpus_path):
        code, out, _ = run(
            capsys, "mask", "--surface", "quinoa", "--corpus", str(liver_corpus_path)
        )
        assert code == 0
        assert out == ""

    def test_max_contexts_truncates(self, capsys, liver_corpus_path):
        code, out, _ = run(
            capsys,
            "mask",
            "--surface",
            "liver",
            "--corpus",
            str(liver_corpus_path),
            "--max-contexts",
            "2",
        )
        assert code == 0
        assert len(out.strip().splitlines()) == 2

    def test_surface_flag_required(self, capsys, liver_corpus_path):
        code, _, err = run(capsys, "mask", "--corpus", str(liver_corpus_path))
        assert code == 1
        assert "--surface" in err


class TestBuildCache:
    def test_writes_deduplicated_entries(self, capsys, liver_corpus_path, tmp_path):
        cache = tmp_path / "cache.jsonl"
        code, out, _ = run(
            capsys,
            "build-cache",
            "--corpus",
            str(liver_corpus_path),
            "--dim",
            "16",
            "--out",
            str(cache),
        )
        assert code == 0
        lines = cache.read_text().strip().splitlines()
        assert f"wrote {len(lines)} entries" in out
        # 6 distinct raw surfaces plus 9 distinct masked contexts
        assert len(lines) == 15

    def test_cache_reproduces_hash_training(self, capsys, liver_corpus_path, tmp_path):
        cache = tmp_path / "cache.jsonl"
        run(
            capsys,
            "build-cache",
            "--corpus",
            str(liver_corpus_path),
            "--dim",
            "16",
            "--out",
            str(cache),
        )
        common = ["--corpus", str(liver_corpus_path), "--epochs", "20"]
        assert (
            run(
                capsys,
                "train",
                *common,
                "--dim",
                "16",
                "--out",
                str(tmp_path / "hash-run"),
            )[0]
            == 0
        )
        assert (
            run(
                capsys,
                "train",
                *common,
                "--encoder",
                f"cache:{cache}",
                "--out",
                str(tmp_path / "cache-run"),
            )[0]
            == 0
        )
        assert (tmp_path / "hash-run" / "model.json").read_bytes() == (
            tmp_path / "cache-run" / "model.json"
        ).read_bytes()


class TestTrain:
    def test_outputs_and_final_loss(self, capsys, liver_corpus_path, tmp_path):
        out_dir = tmp_path / "run"
        code, out, _ = run(
            capsys,
            "train",
            "--corpus",
            str(liver_corpus_path),
            "--dim",
            "16",
            "--epochs",
            "30",
            "--out",
            str(out_dir),
        )
        assert code == 0
        assert "final loss" in out
        for name in ("config.json", "model.json", "loss_trace.json"):
            assert (out_dir / name).exists()
        trace = json.loads((out_dir / "loss_trace.json").read_text())
        assert trace["epochs"] == 30
        assert len(trace["loss"]) == 30
        config = json.loads((out_dir / "config.json").read_text())
        assert config["epochs"] == 30
        assert config["mode"] == "entity-pattern"

    def test_rerun_is_byte_identical(self, capsys, liver_corpus_path, tmp_path):
        argv = [
            "train",
            "--corpus",
            str(liver_corpus_path),
            "--dim",
            "8",
            "--epochs",
            "15",
        ]
        run(capsys, *argv, "--out", str(tmp_path / "a"))
        run(capsys, *argv, "--out", str(tmp_path / "b"))
        for name in ("model.json", "loss_trace.json", "config.json"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_config_file_overrides_defaults(self, capsys, liver_corpus_path, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps({"corpus": str(liver_corpus_path), "lr": 0.5, "epochs": 5})
        )
        code, _, _ = run(
            capsys,
            "train",
            "--config",
            str(config),
            "--dim",
            "8",
            "--out",
            str(tmp_path / "run"),
        )
        assert code == 0
        resolved = json.loads((tmp_path / "run" / "config.json").read_text())
        assert resolved["lr"] == 0.5
        assert resolved["epochs"] == 5

    def test_explicit_flag_beats_config_file(self, capsys, liver_corpus_path, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(
            json.dumps({"corpus": str(liver_corpus_path), "lr": 0.5, "epochs": 5})
        )
        run(
            capsys,
            "train",
            "--config",
            str(config),
            "--lr",
            "0.05",
            "--dim",
            "8",
            "--out",
            str(tmp_path / "run"),
        )
        resolved = json.loads((tmp_path / "run" / "config.json").read_text())
        assert resolved["lr"] == 0.05
        assert resolved["epochs"] == 5

    def test_unknown_config_key_rejected(self, capsys, liver_corpus_path, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"corpus": str(liver_corpus_path), "lrate": 1}))
        code, _, err = run(
            capsys,
            "train",
            "--config",
            str(config),
            "--out",
            str(tmp_path / "run"),
        )
        assert code == 1
        assert "unknown keys" in err
        assert "lrate" in err

    def test_replay_from_emitted_config(self, capsys, liver_corpus_path, tmp_path):
        run(
            capsys,
            "train",
            "--corpus",
            str(liver_corpus_path),
            "--dim",
            "8",
            "--epochs",
            "10",
            "--lr",
            "0.2",
            "--out",
            str(tmp_path / "first"),
        )
        code, _, _ = run(
            capsys,
            "train",
            "--config",
            str(tmp_path / "first" / "config.json"),
            "--out",
            str(tmp_path / "replay"),
        )
        assert code == 0
        assert (tmp_path / "first" / "model.json").read_bytes() == (
            tmp_path / "replay" / "model.json"
        ).read_bytes()

    def test_corpus_required(self, capsys, tmp_path):
        code, _, err = run(capsys, "train", "--out", str(tmp_path / "run"))
        assert code == 1
        assert "--corpus" in err


class TestCv:
    def test_outputs_and_summary(self, capsys, context_corpus_path, tmp_path):
        out_dir = tmp_path / "cv"
        code, out, _ = run(
            capsys,
            "cv",
            "--corpus",
            str(context_corpus_path),
            "--dim",
            "16",
            "--epochs",
            "40",
            "--out",
            str(out_dir),
        )
        assert code == 0
        assert "W/AVG mean F1" in out
        for name in ("config.json", "report.json", "confusion.csv", "errors.jsonl"):
            assert (out_dir / name).exists()
        report = json.loads((out_dir / "report.json").read_text())
        assert report["k"] == 5
        assert report["mode"] == "entity-pattern"
        assert len(report["folds"]) == 5

    def test_rerun_is_byte_identical(self, capsys, context_corpus_path, tmp_path):
        argv = [
            "cv",
            "--corpus",
            str(context_corpus_path),
            "--dim",
            "16",
            "--epochs",
            "25",
        ]
        run(capsys, *argv, "--out", str(tmp_path / "a"))
        run(capsys, *argv, "--out", str(tmp_path / "b"))
        for name in ("report.json", "confusion.csv", "errors.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_class_smaller_than_k_exits_one(self, capsys, liver_corpus_path, tmp_path):
        code, _, err = run(
            capsys,
            "cv",
            "--corpus",
            str(liver_corpus_path),
            "--k",
            "5",
            "--out",
            str(tmp_path / "cv"),
        )
        assert code == 1
        assert "fewer" in err or "k=" in err

    def test_entity_only_mode(self, capsys, context_corpus_path, tmp_path):
        code, _, _ = run(
            capsys,
            "cv",
            "--corpus",
            str(context_corpus_path),
            "--mode",
            "entity-only",
            "--dim",
            "16",
            "--epochs",
            "25",
            "--out",
            str(tmp_path / "cv"),
        )
        assert code == 0
        report = json.loads((tmp_path / "cv" / "report.json").read_text())
        assert report["mode"] == "entity-only"


class TestPredict:
    @pytest.fixture
    def trained(self, capsys, liver_corpus_path, tmp_path):
        out_dir = tmp_path / "model-run"
        run(
            capsys,
            "train",
            "--corpus",
            str(liver_corpus_path),
            "--dim",
            "16",
            "--epochs",
            "120",
            "--out",
            str(out_dir),
        )
        capsys.readouterr()
        return out_dir / "model.json"

    def test_prediction_payload(self, capsys, trained, liver_corpus_path):
        code, out, _ = run(
            capsys,
            "predict",
            "--model",
            str(trained),
            "--surface",
            "liver",
            "--corpus",
            str(liver_corpus_path),
            "--dim",
            "16",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["surface"] == "liver"
        assert payload["predicted"] == "FOOD"
        assert payload["context_count"] == 3
        assert sum(payload["probabilities"].values()) == pytest.approx(1.0, abs=1e-5)

    def test_entity_pattern_mode_needs_corpus(self, capsys, trained):
        code, _, err = run(
            capsys, "predict", "--model", str(trained), "--surface", "liver"
        )
        assert code == 1
        assert "--corpus" in err

    def test_feature_width_mismatch_exits_one(
        self, capsys, trained, liver_corpus_path
    ):
        code, _, err = run(
            capsys,
            "predict",
            "--model",
            str(trained),
            "--surface",
            "liver",
            "--mode",
            "entity-only",
            "--dim",
            "16",
        )
        assert code == 1

    def test_unknown_encoder_kind_exits_one(self, capsys, trained, liver_corpus_path):
        code, _, err = run(
            capsys,
            "predict",
            "--model",
            str(trained),
            "--surface",
            "liver",
            "--corpus",
            str(liver_corpus_path),
            "--encoder",
            "magic:beans",
        )
        assert code == 1
