import csv
import shutil
import subprocess

import numpy as np
import pytest
from click.testing import CliRunner

from mkbridge.cli import cli
from mkbridge.formats import read_bank, write_assignment, write_bank
from mkbridge.models import build_model
from mkbridge.surgery import export_filters

from bridge_helpers import make_imagefolder, self_fit_rows


@pytest.fixture
def runner():
    return CliRunner()


def test_export_command(runner, tmp_path):
    out = tmp_path / "bank.mkfb"
    r = runner.invoke(cli, ["export", "--model", "dscnn_small", "--out", str(out)])
    assert r.exit_code == 0, r.output
    assert "exported 32 filters" in r.output
    assert len(read_bank(out)) == 32


def test_eval_protocol_conformance(tmp_path):
    """eval prints one decimal on stdout line 1 and exits 0, taking the
    candidates/assignment paths as trailing positional arguments."""
    ref = build_model("dscnn_small")
    bank_path = tmp_path / "export.mkfb"
    export_filters(ref, bank_path)
    assign_path = tmp_path / "self.csv"
    write_assignment(self_fit_rows(read_bank(bank_path)), assign_path)
    data = make_imagefolder(tmp_path / "data")
    proc = subprocess.run(
        ["mk-bridge", "eval", "--model", "dscnn_small", "--data", str(data),
         "--subset", "4", "--image-size", "64",
         str(bank_path), str(assign_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    float(proc.stdout.splitlines()[0])  # parses as a number


def test_eval_dataset_missing_exit_1(tmp_path):
    ref = build_model("dscnn_small")
    bank_path = tmp_path / "export.mkfb"
    export_filters(ref, bank_path)
    assign_path = tmp_path / "self.csv"
    write_assignment(self_fit_rows(read_bank(bank_path)), assign_path)
    proc = subprocess.run(
        ["mk-bridge", "eval", "--model", "dscnn_small", "--data",
         str(tmp_path / "nope"), str(bank_path), str(assign_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 1
    assert proc.stderr.startswith("ERROR DatasetMissing:")


def test_eval_unknown_model_is_usage_error(tmp_path):
    proc = subprocess.run(
        ["mk-bridge", "eval", "--model", "resnet50", "--data", "x", "c", "a"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2


@pytest.mark.skipif(
    shutil.which("filterdistill") is None,
    reason="filterdistill CLI not on PATH",
)
def test_greedy_drives_bridge_as_external_evaluator(tmp_path):
    """End-to-end: the distillation CLI's greedy search shells out to
    mk-bridge eval through the evaluator protocol."""
    ref = build_model("dscnn_small", seed=2)
    bank_path = tmp_path / "targets.mkfb"
    export_filters(ref, bank_path)
    rng = np.random.default_rng(9)
    cand_path = tmp_path / "cands.mkfb"
    write_bank(
        rng.normal(size=(4, 7, 7)), [(0, i) for i in range(4)], cand_path
    )
    data = make_imagefolder(tmp_path / "data")
    trace_path = tmp_path / "trace.csv"
    evaluator = (
        "mk-bridge eval --model dscnn_small --init-seed 2 "
        f"--data {data} --subset 4 --image-size 64"
    )
    proc = subprocess.run(
        ["filterdistill", "greedy", "--bank", str(bank_path),
         "--candidates", str(cand_path), "--objective", "external",
         "--evaluator-cmd", evaluator, "--stop-at", "3",
         "--out", str(trace_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    with open(trace_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2  # initial objective plus one removal
    for row in rows:
        float(row["objective"])
