"""Acceptance: render real CSVs produced by the qtransfer CLI, sentinel included.

Uses the primary tool strictly through its command line and file formats. The
frontier run uses a reduced optimization budget (the CSV schema is identical
at any budget).
"""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

from plotkit.cli import main as plotkit_main

pytestmark = pytest.mark.usefixtures("tmp_path")


def run_qtransfer(args: list[str]) -> int:
    proc = subprocess.run(
        [sys.executable, "-m", "qtransfer.cli", *args],
        capture_output=True,
        text=True,
    )
    return proc.returncode


def test_criterion_11_renders_real_run_outputs(tmp_path):
    qtransfer = pytest.importorskip("qtransfer")
    from qtransfer.io import save_chain_config

    # chain ledgers: a generic factorizing chain and the orthogonal-copy
    # chain whose budget serializes as the -inf sentinel
    shared = qtransfer.random_factorizing_config(4, seed=11, overlap=0.5)
    save_chain_config(shared, tmp_path / "shared.json")
    assert run_qtransfer(
        ["chain", "--config", str(tmp_path / "shared.json"), "--out", str(tmp_path / "chain")]
    ) == 0
    copy_cfg = qtransfer.random_factorizing_config(3, seed=12, overlap=0.0)
    save_chain_config(copy_cfg, tmp_path / "copy.json")
    assert run_qtransfer(
        ["chain", "--config", str(tmp_path / "copy.json"), "--out", str(tmp_path / "copychain")]
    ) == 0
    sentinel_ledger = (tmp_path / "copychain" / "ledger.csv").read_text()
    assert "-inf" in sentinel_ledger

    # plateau CSV from the perfect-record branching run
    assert run_qtransfer(
        [
            "darwinism", "--env-qubits", "8", "--record-overlap", "0",
            "--delta", "0.01", "--samples", "100", "--seed", "0",
            "--out", str(tmp_path / "darwinism"),
        ]
    ) == 0

    # frontier CSV (reduced budget; witness exit code is irrelevant here)
    run_qtransfer(
        [
            "frontier", "--overlaps", "0,0.5", "--lambdas", "10,10000",
            "--max-iters", "25", "--restarts", "2", "--seed", "1",
            "--out", str(tmp_path / "frontier"),
        ]
    )
    assert (tmp_path / "frontier" / "frontier.csv").exists()

    jobs = [
        (tmp_path / "frontier" / "frontier.csv", "frontier", tmp_path / "frontier.png"),
        (tmp_path / "darwinism" / "pip.csv", "pip", tmp_path / "plateau.png"),
        (tmp_path / "chain" / "ledger.csv", "ledger", tmp_path / "ledger.png"),
        (tmp_path / "copychain" / "ledger.csv", "ledger", tmp_path / "ledger_sentinel.png"),
    ]
    for source, kind, image in jobs:
        code = plotkit_main([str(source), kind, str(image)])
        assert code == 0, f"rendering {kind} from {source} failed"
        assert image.exists() and image.stat().st_size > 0
    print("criterion 11: PASS - frontier, plateau, and ledger CSVs render, sentinel included")
