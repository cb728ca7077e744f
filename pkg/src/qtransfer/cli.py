"""Command-line entry point.

Subcommands: ``verify`` (residual/classification ensembles), ``chain``
(run a chain config, export trace and ledger CSVs), ``darwinism`` (branching
state, partial-information curve, redundancy, discord), ``frontier``
(optimizer scan over overlap and penalty grids).

Every run writes its data files plus a ``manifest.json`` into the output
directory. Outputs are deterministic: identical flags and seed give
byte-identical files. Exit codes: 0 pass, 1 property violation, 2 usage or
IO error. ``QTRANSFER_WORKERS`` caps the trial worker threads (default: the
machine's logical cores).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .chains import quality_ledger, run_chain
from .channels import (
    Branch,
    TransferSpec,
    check_feasibility,
    complete_to_unitary,
    random_repeatable_spec,
    state_with_overlap,
)
from .darwinism import partial_info_curve, quantum_discord, redundancy
from .errors import (
    DegenerateSystemError,
    NonFactorizingError,
    QTransferError,
)
from .frontier import frontier_scan
from .io import (
    RunManifest,
    SUMMARY_SCHEMA,
    json_float,
    load_chain_config,
    write_csv,
    write_json,
    write_manifest,
)
from .linalg import (
    DensityOperator,
    PureState,
    SubsystemLayout,
    UnitaryOperator,
    basis_state,
    evolve_density,
    inner,
    partial_trace,
    random_density,
    random_pure,
    random_unitary,
    von_neumann_entropy,
)
from .verifiers import mixed_invariant_gap, norm_residual, purified_residual

PASS_TOL = 1e-10
WITNESS_HIGH = 0.99
WITNESS_LOW = 1e-2


def _workers() -> int:
    raw = os.environ.get("QTRANSFER_WORKERS", "")
    if raw.strip():
        return max(1, int(raw))
    return os.cpu_count() or 1


def _run_indexed(fn, n: int) -> list:
    """Deterministic parallel map over trial indices (results in index order)."""
    if n == 0:
        return []
    with ThreadPoolExecutor(max_workers=min(_workers(), n)) as pool:
        return list(pool.map(fn, range(n)))


def _extracted_record(U: UnitaryOperator, spec: TransferSpec, branch: Branch) -> PureState:
    """Record state realized by U on one preserved branch."""
    amps = U.matrix @ np.kron(branch.in_sys.amplitudes, spec.ready.amplitudes)
    table = amps.reshape(branch.in_sys.dim, -1)
    rec = branch.in_sys.amplitudes.conj() @ table
    return PureState(spec.apparatus, rec / np.linalg.norm(rec))


# ---------------------------------------------------------------- verify


def _trial_dichotomy(rng: np.random.Generator, dims: list[int]) -> tuple[bool, str]:
    d_sys = int(rng.choice(dims))
    d_app = int(rng.integers(2, 7))
    overlap = rng.uniform(1e-3, 0.99) * np.exp(2j * np.pi * rng.uniform())
    expect_feasible = bool(rng.integers(0, 2))
    if expect_feasible:
        record_overlap = 1
    else:
        record_overlap = rng.uniform(0.0, 1.0 - 1e-3) * np.exp(2j * np.pi * rng.uniform())
    spec = random_repeatable_spec(d_sys, d_app, overlap, record_overlap, rng)
    report = check_feasibility(spec)
    ok = report.feasible == expect_feasible
    if report.feasible:
        rec_gap = abs(inner(spec.branches[0].out_record, spec.branches[1].out_record) - 1.0)
        ok = ok and rec_gap <= PASS_TOL
    tag = "feasible" if report.feasible else "infeasible"
    return ok, f"{tag} residual={report.max_gram_deviation!r}"


def _trial_norm_residual(rng: np.random.Generator, dims: list[int]) -> tuple[bool, str]:
    d_sys = int(rng.choice(dims))
    d_app = int(rng.integers(2, 7))
    if rng.integers(0, 2):
        spec = random_repeatable_spec(d_sys, d_app, 0.0, rng.uniform(0.0, 0.9), rng)
    else:
        spec = random_repeatable_spec(d_sys, d_app, rng.uniform(0.1, 0.9), 1, rng)
    U = complete_to_unitary(spec)
    rec_v = _extracted_record(U, spec, spec.branches[0])
    rec_w = _extracted_record(U, spec, spec.branches[1])
    alpha = complex(rng.standard_normal(), rng.standard_normal())
    beta = complex(rng.standard_normal(), rng.standard_normal())
    scale = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
    residual = norm_residual(
        alpha / scale,
        beta / scale,
        spec.branches[0].in_sys,
        spec.branches[1].in_sys,
        rec_v,
        rec_w,
    )
    return residual <= PASS_TOL, f"residual={residual!r}"


def _controlled_channel(
    rng: np.random.Generator, d_sys: int, d_app: int
) -> tuple[UnitaryOperator, PureState, PureState, SubsystemLayout]:
    """Channel diagonal in a random system basis: preserves that basis exactly."""
    sys_layout = SubsystemLayout((("S", d_sys),))
    app_layout = SubsystemLayout((("A", d_app),))
    basis = random_unitary(sys_layout, rng).matrix
    blocks = np.zeros((d_sys * d_app, d_sys * d_app), dtype=np.complex128)
    for k in range(d_sys):
        proj = np.outer(basis[:, k], basis[:, k].conj())
        blocks += np.kron(proj, random_unitary(app_layout, rng).matrix)
    joint = sys_layout.tensor(app_layout)
    v = PureState(sys_layout, basis[:, 0])
    w = PureState(sys_layout, basis[:, 1])
    return UnitaryOperator(joint, blocks), v, w, app_layout


def _trial_purified(rng: np.random.Generator, dims: list[int]) -> tuple[bool, str]:
    d_sys = int(rng.choice(dims))
    d_app = int(rng.integers(2, 5))
    if rng.integers(0, 2):
        U, v, w, app_layout = _controlled_channel(rng, d_sys, d_app)
        kind = "controlled"
    else:
        sys_layout = SubsystemLayout((("S", d_sys),))
        app_layout = SubsystemLayout((("A", d_app),))
        drift = random_unitary(app_layout, rng)
        U = UnitaryOperator(
            sys_layout.tensor(app_layout),
            np.kron(np.eye(d_sys, dtype=np.complex128), drift.matrix),
        )
        v = random_pure(sys_layout, rng)
        w = state_with_overlap(v, rng.uniform(0.2, 0.9), rng)
        kind = "drift"
    rank = int(rng.integers(1, d_app + 1))
    rho0 = random_density(app_layout, rank, rng)
    residual = purified_residual(rho0, U, v, w)
    return residual <= PASS_TOL, f"{kind} residual={residual!r}"


def _trial_mixed_invariant(rng: np.random.Generator, dims: list[int]) -> tuple[bool, str]:
    del dims
    d = int(rng.integers(2, 7))
    layout = SubsystemLayout((("A", d),))
    rank = int(rng.integers(1, d + 1))
    rho0 = random_density(layout, rank, rng)
    rho_v = evolve_density(random_unitary(layout, rng), rho0)
    rho_w = evolve_density(random_unitary(layout, rng), rho0)
    lhs, rhs = mixed_invariant_gap(rho0, rho_v, rho_w)
    gap = abs(lhs - rhs)
    return gap <= PASS_TOL, f"gap={gap!r}"


_VERIFY_SUITES = (
    ("dichotomy", _trial_dichotomy),
    ("norm_residual", _trial_norm_residual),
    ("purified", _trial_purified),
    ("mixed_invariant", _trial_mixed_invariant),
)


def cmd_verify(args) -> int:
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return 2
    dims = _parse_int_list(args.dims)
    if not dims or any(d < 2 for d in dims):
        print("error: --dims needs comma-separated integers >= 2", file=sys.stderr)
        return 2
    out = _prepare_out(args.out)

    suites = {}
    lines = []
    all_pass = True
    root = np.random.SeedSequence(args.seed)
    suite_seeds = root.spawn(len(_VERIFY_SUITES))
    for (name, trial_fn), suite_seed in zip(_VERIFY_SUITES, suite_seeds):
        trial_seeds = suite_seed.spawn(args.trials)

        def one(i: int, fn=trial_fn, seeds=trial_seeds):
            return fn(np.random.default_rng(seeds[i]), dims)

        results = _run_indexed(one, args.trials)
        passes = sum(1 for ok, _ in results if ok)
        suites[name] = {"trials": args.trials, "passes": passes}
        all_pass = all_pass and passes == args.trials
        for i, (ok, detail) in enumerate(results):
            lines.append(f"{name} {i:05d} {detail} pass={str(ok).lower()}")
        print(f"{name}: {passes}/{args.trials} pass")

    Path(out, "verdicts.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    summary = {
        "schema": SUMMARY_SCHEMA,
        "subcommand": "verify",
        "trials": args.trials,
        "dims": dims,
        "seed": args.seed,
        "suites": suites,
        "all_pass": all_pass,
    }
    write_json(Path(out, "summary.json"), summary)
    _emit_manifest(
        out,
        "verify",
        {"trials": args.trials, "dims": dims, "seed": args.seed},
        args.seed,
        ["summary.json", "verdicts.txt"],
        all_pass,
    )
    return 0 if all_pass else 1


# ---------------------------------------------------------------- chain


def cmd_chain(args) -> int:
    try:
        config = load_chain_config(args.config)
    except (OSError, json.JSONDecodeError, QTransferError, KeyError, ValueError, TypeError) as exc:
        print(f"error: cannot load chain config: {exc}", file=sys.stderr)
        return 2
    out = _prepare_out(args.out)

    trace = run_chain(config)
    conservation = trace.conservation_defect()

    rows = []
    for stage in trace.stages:
        label = stage.applied_label
        if label is None:
            rows.append([stage.index, "", None, None, None, None])
            continue
        sys_re = stage.sys_overlap.real if stage.sys_overlap is not None else None
        sys_im = stage.sys_overlap.imag if stage.sys_overlap is not None else None
        rec_mag = stage.record_fidelities[label]
        log2_term = (
            2.0 * math.log2(rec_mag) if rec_mag > 1e-12 else float("-inf")
        )
        rows.append([stage.index, label, sys_re, sys_im, rec_mag, log2_term])
    write_csv(
        Path(out, "trace.csv"),
        ["stage", "label", "sys_overlap_re", "sys_overlap_im", "record_overlap_mag", "log2_term"],
        rows,
    )

    summary = {
        "schema": SUMMARY_SCHEMA,
        "subcommand": "chain",
        "initial_overlap": [trace.initial_overlap.real, trace.initial_overlap.imag],
        "factorizing": trace.factorizing,
        "conservation_defect": conservation,
        "stages": len(trace.stages),
    }
    passed = conservation <= PASS_TOL

    ledger_rows = []
    if trace.factorizing:
        lhs = trace.initial_overlap
        rhs = trace.final.sys_overlap
        for label in trace.link_labels:
            rhs *= trace.final.record_overlaps[label]
        product_gap = abs(lhs - rhs)
        ledger = quality_ledger(trace)
        for label, term in ledger.terms:
            ledger_rows.append([label, term])
        ledger_rows.append(["budget", ledger.budget])
        summary["product_gap"] = product_gap
        summary["ledger_budget"] = json_float(ledger.budget)
        summary["ledger_consistent"] = ledger.consistent
        passed = passed and product_gap <= PASS_TOL and ledger.consistent
    else:
        ledger_rows.append(["budget", 2.0 * math.log2(abs(trace.initial_overlap))
                            if abs(trace.initial_overlap) > 1e-12 else float("-inf")])
        summary["product_gap"] = None
        summary["ledger_budget"] = json_float(ledger_rows[0][1])
        summary["ledger_consistent"] = None
    write_csv(Path(out, "ledger.csv"), ["label", "log2_term"], ledger_rows)

    summary["passed"] = passed
    write_json(Path(out, "summary.json"), summary)
    _emit_manifest(
        out,
        "chain",
        {"config": str(args.config)},
        0,
        ["trace.csv", "ledger.csv", "summary.json"],
        passed,
    )
    return 0 if passed else 1


# ---------------------------------------------------------------- darwinism


def cmd_darwinism(args) -> int:
    if args.env_qubits < 1 or not 0.0 <= args.record_overlap <= 1.0 or not 0.0 < args.delta < 1.0:
        print(
            "error: need --env-qubits >= 1, --record-overlap in [0, 1], --delta in (0, 1)",
            file=sys.stderr,
        )
        return 2
    if args.samples < 1:
        print("error: --samples must be >= 1", file=sys.stderr)
        return 2
    out = _prepare_out(args.out)

    from .chains import build_branching_state

    sys_layout = SubsystemLayout((("S", 2),))
    v = basis_state(sys_layout, 0)
    w = basis_state(sys_layout, 1)
    r = args.record_overlap
    records = []
    for k in range(args.env_qubits):
        frag = SubsystemLayout(((f"E{k + 1}", 2),))
        rec_v = basis_state(frag, 0)
        rec_w = PureState(frag, np.array([r, math.sqrt(1.0 - r * r)], dtype=np.complex128))
        records.append((rec_v, rec_w))
    amp = 1.0 / math.sqrt(2.0)
    state = build_branching_state(amp, amp, v, w, records)

    curve = partial_info_curve(state, samples_per_size=args.samples, seed=args.seed)
    write_csv(
        Path(out, "pip.csv"),
        ["fragment_size", "mean_bits", "min_bits", "max_bits", "samples"],
        [[p.fragment_size, p.mean_bits, p.min_bits, p.max_bits, p.samples] for p in curve.points],
    )

    h_s = von_neumann_entropy(partial_trace(state, ["S"]))
    try:
        r_delta = redundancy(
            state, args.delta, samples_per_size=args.samples, seed=args.seed
        )
    except DegenerateSystemError:
        r_delta = 0.0  # no system entropy means nothing to record
    rho_se1 = partial_trace(state, ["S", "E1"])
    discord = quantum_discord(rho_se1, "E1")

    summary = {
        "schema": SUMMARY_SCHEMA,
        "subcommand": "darwinism",
        "env_qubits": args.env_qubits,
        "record_overlap": args.record_overlap,
        "delta": args.delta,
        "samples": args.samples,
        "seed": args.seed,
        "H_S": h_s,
        "R_delta": r_delta,
        "discord_SE1": discord,
    }
    write_json(Path(out, "summary.json"), summary)
    _emit_manifest(
        out,
        "darwinism",
        {
            "env_qubits": args.env_qubits,
            "record_overlap": args.record_overlap,
            "delta": args.delta,
            "samples": args.samples,
            "seed": args.seed,
        },
        args.seed,
        ["pip.csv", "summary.json"],
        True,
    )
    return 0


# ---------------------------------------------------------------- frontier


def cmd_frontier(args) -> int:
    try:
        overlaps = _parse_float_list(args.overlaps)
        lambdas = _parse_float_list(args.lambdas)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not overlaps or not lambdas:
        print("error: --overlaps and --lambdas must be nonempty", file=sys.stderr)
        return 2
    if any(not 0.0 <= c < 1.0 for c in overlaps) or any(l < 0.0 for l in lambdas):
        print("error: overlaps must lie in [0, 1), lambdas must be >= 0", file=sys.stderr)
        return 2
    out = _prepare_out(args.out)

    rows = frontier_scan(
        overlaps,
        lambdas,
        seed=args.seed,
        apparatus_dim=args.apparatus_dim,
        max_iters=args.max_iters,
        restarts=args.restarts,
    )
    write_csv(
        Path(out, "frontier.csv"),
        ["overlap", "lambda", "distinguishability", "disturbance", "objective", "iterations", "converged"],
        [
            [
                row.overlap,
                row.point.lam,
                row.point.distinguishability,
                row.point.disturbance,
                row.point.objective,
                row.point.iterations,
                row.point.converged,
            ]
            for row in rows
        ],
    )

    witness_ok = True
    for row in rows:
        if row.overlap == 0.0 and row.point.lam <= 100.0:
            witness_ok = witness_ok and row.point.distinguishability > WITNESS_HIGH
        elif row.overlap >= 0.1 and row.point.lam >= 1e4:
            witness_ok = witness_ok and row.point.distinguishability < WITNESS_LOW

    summary = {
        "schema": SUMMARY_SCHEMA,
        "subcommand": "frontier",
        "overlaps": overlaps,
        "lambdas": lambdas,
        "seed": args.seed,
        "apparatus_dim": args.apparatus_dim,
        "max_iters": args.max_iters,
        "restarts": args.restarts,
        "rows": len(rows),
        "witness_pass": witness_ok,
    }
    write_json(Path(out, "summary.json"), summary)
    _emit_manifest(
        out,
        "frontier",
        {
            "overlaps": overlaps,
            "lambdas": lambdas,
            "seed": args.seed,
            "apparatus_dim": args.apparatus_dim,
            "max_iters": args.max_iters,
            "restarts": args.restarts,
        },
        args.seed,
        ["frontier.csv", "summary.json"],
        witness_ok,
    )
    return 0 if witness_ok else 1


# ---------------------------------------------------------------- plumbing


def _parse_int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _parse_float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _prepare_out(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit_manifest(out: Path, subcommand: str, parameters: dict, seed: int, outputs, passed: bool):
    manifest = RunManifest(
        subcommand=subcommand,
        parameters=parameters,
        seed=seed,
        version=__version__,
        outputs=tuple(list(outputs) + ["manifest.json"]),
        passed=passed,
    )
    write_manifest(manifest, Path(out, "manifest.json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtransfer",
        description="Information-transfer laboratory: verification suites, chains, "
        "redundancy metrics, and frontier scans.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("verify", help="run the residual/classification ensembles")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--dims", type=str, default="2,3,4", help="system dimensions, comma separated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default="runs/verify")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("chain", help="run a chain config and export trace/ledger CSVs")
    p.add_argument("--config", type=str, required=True)
    p.add_argument("--out", type=str, default="runs/chain")
    p.set_defaults(handler=cmd_chain)

    p = sub.add_parser("darwinism", help="branching-state redundancy analysis")
    p.add_argument("--env-qubits", type=int, default=8)
    p.add_argument("--record-overlap", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default="runs/darwinism")
    p.set_defaults(handler=cmd_darwinism)

    p = sub.add_parser("frontier", help="optimize the information-disturbance tradeoff")
    p.add_argument("--overlaps", type=str, default="0,0.5")
    p.add_argument("--lambdas", type=str, default="10,10000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--apparatus-dim", type=int, default=4)
    p.add_argument("--max-iters", type=int, default=400)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--out", type=str, default="runs/frontier")
    p.set_defaults(handler=cmd_frontier)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (QTransferError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
