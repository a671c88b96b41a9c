"""Ingestion, run config, artifact store, and CLI round-trip tests."""

import json
import os
from pathlib import Path

import pytest

import statementkit.artifacts as art
import statementkit.cli as cli
import statementkit.scorer as sco
from statementkit.errors import (
    ConfigError,
    FileUnreadable,
    RejectThresholdExceeded,
    StatementKitError,
)
from statementkit.ingest import ingest
from statementkit.runconfig import ENDPOINT_ENV_VAR, load_run_config
from statementkit.schema import load_bundled_schema
from statementkit.statgen import load_statements


# --- ingest ---

QQP_MAP = {"question1": "q1", "question2": "q2", "gold": "label"}


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_ingest_delimited_happy_path(tmp_path):
    f = write(tmp_path / "d.csv",
              "q1,q2,label\nhow tall,how high,duplicate\na,b,not_duplicate\nx,y,duplicate\n")
    got = ingest(f, "delimited", QQP_MAP)
    assert len(got.examples) == 3 and got.rejects == []
    assert got.examples[0].values == {"question1": "how tall", "question2": "how high"}
    assert got.examples[0].gold == "duplicate"
    assert got.examples[0].example_id == "r000000"


def test_ingest_missing_gold_column_rejects_row(tmp_path):
    f = write(tmp_path / "d.csv", "q1,q2,label\na,b,duplicate\nc,d,\ne,f,not_duplicate\n")
    got = ingest(f, "delimited", QQP_MAP)
    assert len(got.examples) == 2
    assert len(got.rejects) == 1 and got.rejects[0]["row"] == 1
    assert "label" in got.rejects[0]["reason"]


def test_ingest_threshold(tmp_path):
    f = write(tmp_path / "d.csv", "q1,q2,label\na,b,\nc,d,\ne,f,x\ng,h,y\ni,j,z\n")
    with pytest.raises(RejectThresholdExceeded):
        ingest(f, "delimited", QQP_MAP)
    # 300 rows, 3 bad: above max(1, 3) is false, so it passes
    rows = ["q1,q2,label"] + [f"a{i},b{i},lab" for i in range(297)] + ["x,,", "y,,", "z,,"]
    got = ingest(write(tmp_path / "big.csv", "\n".join(rows) + "\n"), "delimited", QQP_MAP)
    assert len(got.rejects) == 3 and got.threshold == 3
    rows.append("w,,")
    with pytest.raises(RejectThresholdExceeded):
        ingest(write(tmp_path / "big2.csv", "\n".join(rows) + "\n"), "delimited", QQP_MAP)


def test_ingest_tsv_and_example_id(tmp_path):
    f = write(tmp_path / "d.tsv", "id\tq1\tq2\tlabel\nex9\ta\tb\tduplicate\n")
    got = ingest(f, "delimited", QQP_MAP | {"example_id": "id"})
    assert got.examples[0].example_id == "ex9"


def test_ingest_record_per_line(tmp_path):
    lines = [
        json.dumps({"q1": "a", "q2": "b", "label": "duplicate"}),
        "this is not json",
        json.dumps({"q1": "c", "q2": "d", "label": "not_duplicate"}),
    ]
    got = ingest(write(tmp_path / "d.jsonl", "\n".join(lines) + "\n"),
                 "record-per-line", QQP_MAP)
    assert len(got.examples) == 2 and len(got.rejects) == 1


def test_ingest_schema_gold_check(tmp_path):
    f = write(tmp_path / "d.csv", "q1,q2,label\na,b,duplicate\nc,d,maybe\n")
    got = ingest(f, "delimited", QQP_MAP, schema=load_bundled_schema("qqp"))
    assert len(got.examples) == 1
    assert "not in labels" in got.rejects[0]["reason"]


def test_ingest_unreadable_and_bad_format(tmp_path):
    with pytest.raises(FileUnreadable):
        ingest(tmp_path / "nope.csv", "delimited", QQP_MAP)
    f = write(tmp_path / "d.csv", "q1,q2,label\n")
    with pytest.raises(StatementKitError):
        ingest(f, "parquet", QQP_MAP)
    with pytest.raises(StatementKitError):
        ingest(f, "delimited", {"question1": "q1"})


# --- artifacts ---

def test_publish_and_verify(tmp_path):
    resolved = {"x": 1}
    target = art.publish(tmp_path, "gen", resolved, 7, {"a.txt": b"alpha", "b.bin": b"\x00\x01"})
    assert target.name == f"gen-{art.config_digest(resolved)}"
    manifest = art.load_manifest(target)
    assert manifest["seed"] == 7 and manifest["config"] == resolved
    assert art.verify_outputs(target) == []
    # identical republish is a no-op
    again = art.publish(tmp_path, "gen", resolved, 7, {"a.txt": b"alpha", "b.bin": b"\x00\x01"})
    assert again == target
    # conflicting bytes under the same key must refuse
    with pytest.raises(StatementKitError):
        art.publish(tmp_path, "gen", resolved, 7, {"a.txt": b"beta"})


def test_verify_detects_tamper(tmp_path):
    target = art.publish(tmp_path, "gen", {"y": 2}, 0, {"a.txt": b"alpha"})
    (target / "a.txt").write_bytes(b"tampered")
    assert art.verify_outputs(target) == ["a.txt: checksum mismatch"]


def test_atomic_write_leaves_no_temp_files(tmp_path):
    art.atomic_write_text(tmp_path / "f.txt", "hello")
    assert (tmp_path / "f.txt").read_text() == "hello"
    assert [p.name for p in tmp_path.iterdir()] == ["f.txt"]


# --- run config ---

def base_config(tmp_path, **overrides):
    doc = {
        "seed": 5,
        "out": str(tmp_path / "runs"),
        "backend": "native",
        "schemas": ["bundled:qqp", "bundled:mnli"],
        "datasets": {
            "qqp": {"train": {"synthetic": "fuzz", "n": 60},
                    "eval": {"synthetic": "fuzz", "n": 20}},
            "mnli": {"train": {"synthetic": "fuzz", "n": 60}},
        },
        "mixture": {"per_dataset_n": 80},
        "scorer": {"feature_space_bits": 12, "epochs": 2},
        "matrix": {"train_runs": 2, "eval_runs": 2, "nshot": [0, 4],
                   "eval_datasets": ["qqp"], "mean_kind": "arithmetic"},
    }
    doc.update(overrides)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return path


def test_load_run_config(tmp_path):
    cfg = load_run_config(base_config(tmp_path))
    assert cfg.seed == 5 and cfg.backend_kind == "native"
    assert cfg.mixture.per_dataset_n == 80
    assert cfg.scorer.feature_space_bits == 12
    assert cfg.matrix["eval_datasets"] == ["qqp"]
    # overrides: seed changes the digest, out does not
    alt = load_run_config(base_config(tmp_path), seed_override=9)
    assert alt.resolved["seed"] == 9
    moved = load_run_config(base_config(tmp_path), out_override="elsewhere")
    assert moved.resolved == cfg.resolved and moved.out == "elsewhere"


def test_config_violations_are_enumerated(tmp_path):
    path = base_config(
        tmp_path,
        backend="remote",
        schemas=["bundled:nosuch", "missing.schema"],
        extra_key=1,
        matrix={"train_runs": 0, "eval_datasets": [], "mean_kind": "median"},
    )
    with pytest.raises(ConfigError) as err:
        load_run_config(path)
    text = "\n".join(err.value.violations)
    assert len(err.value.violations) >= 6
    for needle in ("extra_key", "backend", "nosuch", "missing.schema",
                   "train_runs", "mean_kind", "eval_datasets"):
        assert needle in text


def test_endpoint_env_override(tmp_path, monkeypatch):
    cfg = load_run_config(base_config(tmp_path, backend="external:cmd-a"))
    assert cfg.backend_kind == "external" and cfg.endpoint() == "cmd-a"
    monkeypatch.setenv(ENDPOINT_ENV_VAR, "cmd-b")
    assert cfg.endpoint() == "cmd-b"


# --- CLI commands end to end ---

def run_cli(*argv):
    return cli.main(list(argv))


def test_validate_schema_command(tmp_path, capsys):
    good = run_cli("validate-schema", "bundled:qqp", "bundled:mnli")
    assert good == 0
    assert capsys.readouterr().out.count(": ok") == 2
    bad_file = tmp_path / "bad.schema"
    bad_file.write_text("dataset_id: x\ncategory: NOPE\ngold_field: g\n")
    assert run_cli("validate-schema", str(bad_file)) == 1
    assert "INVALID" in capsys.readouterr().out


def test_gen_mix_train_predict_pipeline(tmp_path, capsys):
    config = base_config(tmp_path)

    assert run_cli("gen", "--config", str(config)) == 0
    gen_dir = Path(capsys.readouterr().out.strip())
    pool = load_statements(gen_dir / "qqp.statements.jsonl")
    assert len(pool) == 60 * 4  # 60 examples x 4 label-conditioned templates
    assert art.verify_outputs(gen_dir) == []

    assert run_cli("mix", "--config", str(config)) == 0
    mix_dir = Path(capsys.readouterr().out.strip())
    mixture = load_statements(mix_dir / "mixture.jsonl")
    assert len(mixture) == 160  # two datasets x per_dataset_n=80

    assert run_cli("train", "--config", str(config)) == 0
    train_dir = Path(capsys.readouterr().out.strip())
    model = sco.load_model(train_dir / "model.stmk")
    assert model.config.feature_space_bits == 12

    assert run_cli("predict", "--config", str(config),
                   "--model", str(train_dir / "model.stmk"), "--dataset", "qqp") == 0
    out_lines = capsys.readouterr().out.strip().splitlines()
    summary = json.loads(out_lines[0])
    assert summary["n"] == 20 and 0.0 <= summary["accuracy"] <= 1.0
    predict_dir = Path(out_lines[-1])
    records = [json.loads(l) for l in
               (predict_dir / "predictions.jsonl").read_text().splitlines()]
    assert len(records) == 20
    assert all(r["predicted"] in ("duplicate", "not_duplicate") for r in records)


def test_eval_command_and_manifest_rerun(tmp_path, capsys):
    config = base_config(tmp_path)
    assert run_cli("eval", "--config", str(config)) == 0
    eval_dir = Path(capsys.readouterr().out.strip())
    report = json.loads((eval_dir / "report.json").read_text())
    assert [len(c["values"]) for c in report["cells"] if not c["skipped"]] == [4, 4]
    assert (eval_dir / "report.csv").read_text().startswith("dataset,")
    assert "task_mean" in (eval_dir / "report.txt").read_text()

    # rerun from the manifest alone into a fresh directory: bytes must match
    fresh = tmp_path / "fresh"
    assert run_cli("eval", "--config", str(eval_dir / "manifest.json"),
                   "--out", str(fresh)) == 0
    rerun_dir = Path(capsys.readouterr().out.strip())
    assert rerun_dir != eval_dir
    assert (rerun_dir / "report.json").read_bytes() == (eval_dir / "report.json").read_bytes()
    assert (rerun_dir / "report.csv").read_bytes() == (eval_dir / "report.csv").read_bytes()
    assert rerun_dir.name == eval_dir.name  # same config digest

    # idempotent rerun into the same directory is a quiet no-op
    assert run_cli("eval", "--config", str(config)) == 0


def test_sweep_command(tmp_path, capsys):
    config = base_config(tmp_path)
    assert run_cli("sweep", "--config", str(config), "--axis", "spc",
                   "--points", "1,2") == 0
    sweep_dir = Path(capsys.readouterr().out.strip())
    report = json.loads((sweep_dir / "sweep.json").read_text())
    assert report["axis"] == "spc"
    assert [p["point"] for p in report["points"]] == ["1", "2"]


def test_cli_error_is_machine_readable(tmp_path, capsys):
    path = base_config(tmp_path, backend="remote")
    assert run_cli("gen", "--config", str(path)) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"
    assert any("backend" in v for v in err["violations"])


def test_cli_rejects_partial_artifacts_on_bad_config(tmp_path, capsys):
    out = tmp_path / "runs"
    path = base_config(tmp_path, matrix={"eval_datasets": ["qqp"], "mean_kind": "median"})
    assert run_cli("eval", "--config", str(path)) == 2
    capsys.readouterr()
    assert not out.exists() or not any(out.iterdir())
