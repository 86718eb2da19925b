import pytest

from neuralbrane.cli import main
from neuralbrane.serialize import read_embedding


def train_args(paths, out, extra=()):
    edge_path, attr_path, label_path = paths
    return [
        "train",
        "--edges", str(edge_path),
        "--attr-file", str(attr_path),
        "--label-file", str(label_path),
        "--d1", "4", "--d2", "4", "--hidden", "6",
        "--epochs", "2", "--seed", "1",
        "--out", str(out),
    ] + list(extra)


class TestTrainCommand:
    def test_writes_embedding_checkpoint_and_log(self, toy_files, tmp_path, capsys):
        out = tmp_path / "emb.txt"
        log_file = tmp_path / "log.csv"
        code = main(train_args(toy_files, out, ["--log-file", str(log_file)]))
        assert code == 0
        table = read_embedding(out)
        assert table.node_count == 5
        assert (tmp_path / "emb.txt.ckpt").exists()
        lines = log_file.read_text().splitlines()
        assert lines[0] == "epoch,loss,seconds,triplets"
        assert len(lines) >= 2

    def test_log_to_stdout_by_default(self, toy_files, tmp_path, capsys):
        out = tmp_path / "emb.txt"
        assert main(train_args(toy_files, out)) == 0
        captured = capsys.readouterr().out
        assert captured.startswith("epoch,loss,seconds,triplets")

    def test_missing_attribute_file_exits_one(self, toy_files, tmp_path, capsys):
        edge_path, _, label_path = toy_files
        missing = tmp_path / "nope.txt"
        code = main([
            "train", "--edges", str(edge_path), "--attr-file", str(missing),
            "--label-file", str(label_path), "--out", str(tmp_path / "x.txt"),
            "--epochs", "1",
        ])
        assert code == 1
        assert "nope.txt" in capsys.readouterr().err

    def test_seed_reproducibility_byte_identical(self, toy_files, tmp_path, capsys):
        out1, out2 = tmp_path / "a.txt", tmp_path / "b.txt"
        assert main(train_args(toy_files, out1)) == 0
        assert main(train_args(toy_files, out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()
        assert (tmp_path / "a.txt.ckpt").read_bytes() == (tmp_path / "b.txt.ckpt").read_bytes()

    def test_binary_output(self, toy_files, tmp_path, capsys):
        out = tmp_path / "emb.bin"
        assert main(train_args(toy_files, out, ["--emb-format", "binary"])) == 0
        assert out.read_bytes()[:4] == b"NBRN"
        assert read_embedding(out).node_count == 5

    def test_export_f_layer(self, toy_files, tmp_path, capsys):
        out = tmp_path / "emb.txt"
        assert main(train_args(toy_files, out, ["--export-layer", "f"])) == 0
        assert read_embedding(out).dim == 8  # d1 + d2


class TestConfigFile:
    def test_file_supplies_defaults_flags_win(self, toy_files, tmp_path, capsys):
        edge_path, attr_path, label_path = toy_files
        config = tmp_path / "run.cfg"
        config.write_text(
            "# training setup\n"
            f"edges={edge_path}\n"
            f"attr-file={attr_path}\n"
            f"label-file={label_path}\n"
            "d1=4\nd2=4\nhidden=6\nepochs=5\nseed=1\n"
            f"out={tmp_path / 'from_config.txt'}\n"
        )
        code = main(["train", "--config", str(config), "--epochs", "1",
                     "--log-file", str(tmp_path / "log.csv")])
        assert code == 0
        # the flag (1 epoch) overrides the file (5 epochs)
        rows = (tmp_path / "log.csv").read_text().splitlines()
        assert len(rows) == 2
        assert (tmp_path / "from_config.txt").exists()

    def test_unknown_key_rejected(self, toy_files, tmp_path, capsys):
        config = tmp_path / "run.cfg"
        config.write_text("no-such-option=1\n")
        code = main(["train", "--config", str(config), "--out", str(tmp_path / "x")])
        assert code == 1
        assert "no-such-option" in capsys.readouterr().err


class TestEmbedCommand:
    def test_checkpoint_reexport_matches(self, toy_files, tmp_path, capsys):
        out = tmp_path / "emb.txt"
        assert main(train_args(toy_files, out)) == 0
        edge_path, attr_path, label_path = toy_files
        again = tmp_path / "again.txt"
        code = main([
            "embed", "--edges", str(edge_path), "--attr-file", str(attr_path),
            "--label-file", str(label_path),
            "--checkpoint", str(tmp_path / "emb.txt.ckpt"),
            "--out", str(again),
        ])
        assert code == 0
        assert again.read_bytes() == out.read_bytes()


class TestEvaluateCommand:
    @pytest.fixture
    def trained(self, toy_files, tmp_path, capsys):
        out = tmp_path / "emb.txt"
        main(train_args(toy_files, out))
        capsys.readouterr()
        return out, toy_files[2]

    def test_classify_report(self, trained, tmp_path, capsys):
        emb, labels = trained
        report = tmp_path / "report.csv"
        code = main([
            "evaluate", "--embeddings", str(emb), "--labels", str(labels),
            "--task", "classify", "--ratios", "0.5", "--repeats", "2",
            "--seed", "3", "--report", str(report),
        ])
        assert code == 0
        lines = report.read_text().splitlines()
        assert lines[0] == "task,train_ratio,runs,macro_f1_mean,macro_f1_std"
        assert lines[1].startswith("classify,0.5,2,")
        assert "macro-F1" in capsys.readouterr().out

    def test_cluster_report(self, trained, tmp_path, capsys):
        emb, labels = trained
        report = tmp_path / "report.csv"
        code = main([
            "evaluate", "--embeddings", str(emb), "--labels", str(labels),
            "--task", "cluster", "--repeats", "2", "--report", str(report),
        ])
        assert code == 0
        header = report.read_text().splitlines()[0]
        assert header == "task,clusters,runs,nmi_mean,nmi_std,purity_mean,purity_std"

    def test_classify_without_labels_fails(self, trained, capsys):
        emb, _ = trained
        assert main(["evaluate", "--embeddings", str(emb)]) == 1
        assert "labels" in capsys.readouterr().err

    def test_project_task_csv(self, trained, tmp_path, capsys):
        emb, labels = trained
        out = tmp_path / "proj.csv"
        code = main([
            "evaluate", "--embeddings", str(emb), "--labels", str(labels),
            "--task", "project", "--out", str(out),
        ])
        assert code == 0
        rows = [line.split(",") for line in out.read_text().splitlines()]
        assert len(rows) == 5
        assert all(len(r) == 4 for r in rows)  # id, x, y, label

    def test_project_subcommand_without_labels(self, trained, tmp_path, capsys):
        emb, _ = trained
        out = tmp_path / "proj.csv"
        assert main(["project", "--embeddings", str(emb), "--out", str(out)]) == 0
        rows = [line.split(",") for line in out.read_text().splitlines()]
        assert all(len(r) == 3 for r in rows)  # id, x, y

    def test_evaluate_reads_binary_embeddings(self, toy_files, tmp_path, capsys):
        out = tmp_path / "emb.bin"
        assert main(train_args(toy_files, out, ["--emb-format", "binary"])) == 0
        code = main([
            "evaluate", "--embeddings", str(out), "--labels", str(toy_files[2]),
            "--ratios", "0.5", "--repeats", "2",
        ])
        assert code == 0
        assert "macro-F1" in capsys.readouterr().out

    def test_evaluate_determinism(self, trained, tmp_path, capsys):
        emb, labels = trained
        r1, r2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
        for path in (r1, r2):
            assert main([
                "evaluate", "--embeddings", str(emb), "--labels", str(labels),
                "--ratios", "0.5,0.7", "--repeats", "3", "--seed", "11",
                "--report", str(path),
            ]) == 0
        assert r1.read_bytes() == r2.read_bytes()


class TestAblateCommand:
    def test_two_result_rows_and_shared_seed(self, toy_files, tmp_path, capsys, caplog):
        import logging
        edge_path, attr_path, label_path = toy_files
        out = tmp_path / "ablation.csv"
        with caplog.at_level(logging.INFO, logger="neuralbrane.cli"):
            code = main([
                "ablate-pooling", "--edges", str(edge_path),
                "--attr-file", str(attr_path), "--label-file", str(label_path),
                "--d1", "4", "--d2", "4", "--hidden", "6", "--epochs", "2",
                "--seed", "5", "--repeats", "2", "--out", str(out),
            ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "pooling,macro_f1_mean,macro_f1_std"
        assert len(lines) == 3
        assert lines[1].startswith("max,") and lines[2].startswith("sum,")
        # both runs must log the same triplet stream seed
        seed_lines = [r.message for r in caplog.records if "triplet stream seed" in r.message]
        assert seed_lines == ["pooling=max triplet stream seed: 5",
                              "pooling=sum triplet stream seed: 5"]


class TestExitCodes:
    def test_unknown_flag_is_user_error(self, capsys):
        assert main(["train", "--no-such-flag"]) == 1

    def test_bad_choice_is_user_error(self, toy_files, tmp_path, capsys):
        assert main(train_args(toy_files, tmp_path / "x", ["--pooling", "avg"])) == 1

    def test_divergence_is_internal_error(self, toy_files, tmp_path, capsys):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = main(train_args(toy_files, tmp_path / "x",
                                   ["--lr", "1e12", "--epochs", "8"]))
        assert code == 2
        assert "internal error" in capsys.readouterr().err

    def test_log_level_env_var(self, toy_files, tmp_path, capsys, monkeypatch):
        import logging
        monkeypatch.setenv("NEURAL_BRANE_LOG", "warn")
        logging.getLogger().handlers.clear()
        assert main(train_args(toy_files, tmp_path / "x.txt")) == 0
        assert logging.getLogger().level == logging.WARNING
        logging.getLogger().handlers.clear()

    def test_module_entry_point(self, tmp_path):
        import subprocess, sys
        result = subprocess.run(
            [sys.executable, "-m", "neuralbrane.cli", "train", "--help"],
            capture_output=True, text=True,
        )
        assert result.returncode == 0
        assert "--batch-size" in result.stdout


class TestHelp:
    def test_subcommand_help_documents_defaults(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["train", "--help"])
        assert excinfo.value.code == 0
        text = capsys.readouterr().out
        for token in ("--lr", "0.5", "--lambda", "5e-05", "--batch-size", "100",
                      "--epochs", "30", "--pooling", "--grad-agg", "--tol"):
            assert token in text

    def test_all_subcommands_have_help(self, capsys):
        for command in ("train", "embed", "evaluate", "project", "ablate-pooling"):
            with pytest.raises(SystemExit) as excinfo:
                main([command, "--help"])
            assert excinfo.value.code == 0
            assert capsys.readouterr().out
