"""File formats: JSON configs, CSV exports, run manifests.

Complex numbers are stored as ``[re, im]`` pairs, vectors as lists of pairs,
matrices as lists of rows of pairs. CSV floats are written with ``repr`` so
they round-trip exactly; the -inf sentinel serializes as the string ``-inf``.
All JSON is written with sorted keys and a trailing newline so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .chains import ChainConfig, ChainLink
from .channels import Branch, TransferSpec
from .errors import InvalidStateError
from .linalg import PureState, SubsystemLayout, UnitaryOperator

TRANSFER_SPEC_SCHEMA = "qtransfer.transfer-spec/1"
CHAIN_CONFIG_SCHEMA = "qtransfer.chain-config/1"
SUMMARY_SCHEMA = "qtransfer.summary/1"
MANIFEST_SCHEMA = "qtransfer.manifest/1"


def complex_to_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def pair_to_complex(pair) -> complex:
    if not isinstance(pair, (list, tuple)) or len(pair) != 2:
        raise InvalidStateError(f"expected [re, im] pair, got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def vector_to_pairs(vec: np.ndarray) -> list[list[float]]:
    return [complex_to_pair(complex(z)) for z in np.asarray(vec).reshape(-1)]


def pairs_to_vector(pairs) -> np.ndarray:
    return np.array([pair_to_complex(p) for p in pairs], dtype=np.complex128)


def matrix_to_pairs(mat: np.ndarray) -> list[list[list[float]]]:
    return [[complex_to_pair(complex(z)) for z in row] for row in np.asarray(mat)]


def pairs_to_matrix(rows) -> np.ndarray:
    return np.array([[pair_to_complex(p) for p in row] for row in rows], dtype=np.complex128)


def _layout_to_list(layout: SubsystemLayout) -> list[list]:
    return [[label, dim] for label, dim in layout.factors]


def _layout_from_list(data) -> SubsystemLayout:
    return SubsystemLayout(tuple((str(label), int(dim)) for label, dim in data))


def transfer_spec_to_dict(spec: TransferSpec) -> dict:
    return {
        "schema": TRANSFER_SPEC_SCHEMA,
        "system": _layout_to_list(spec.system),
        "apparatus": _layout_to_list(spec.apparatus),
        "ready": vector_to_pairs(spec.ready.amplitudes),
        "branches": [
            {
                "in_sys": vector_to_pairs(br.in_sys.amplitudes),
                "out_sys": vector_to_pairs(br.out_sys.amplitudes),
                "out_record": vector_to_pairs(br.out_record.amplitudes),
            }
            for br in spec.branches
        ],
    }


def transfer_spec_from_dict(data: dict) -> TransferSpec:
    if data.get("schema") != TRANSFER_SPEC_SCHEMA:
        raise InvalidStateError(f"unexpected schema {data.get('schema')!r}")
    system = _layout_from_list(data["system"])
    apparatus = _layout_from_list(data["apparatus"])
    branches = tuple(
        Branch(
            in_sys=PureState(system, pairs_to_vector(br["in_sys"])),
            out_sys=PureState(system, pairs_to_vector(br["out_sys"])),
            out_record=PureState(apparatus, pairs_to_vector(br["out_record"])),
        )
        for br in data["branches"]
    )
    return TransferSpec(
        system=system,
        apparatus=apparatus,
        ready=PureState(apparatus, pairs_to_vector(data["ready"])),
        branches=branches,
    )


def chain_config_to_dict(config: ChainConfig) -> dict:
    links = []
    for i, link in enumerate(config.links):
        entry = {
            "label": link.label,
            "dim": link.dim,
            "unitary": matrix_to_pairs(link.unitary.matrix),
        }
        if link.ready is not None:
            entry["ready"] = vector_to_pairs(link.ready.amplitudes)
        links.append(entry)
    return {
        "schema": CHAIN_CONFIG_SCHEMA,
        "system_label": config.system_label,
        "system_dim": config.system_dim,
        "v": vector_to_pairs(config.v.amplitudes),
        "w": vector_to_pairs(config.w.amplitudes),
        "links": links,
    }


def chain_config_from_dict(data: dict) -> ChainConfig:
    if data.get("schema") != CHAIN_CONFIG_SCHEMA:
        raise InvalidStateError(f"unexpected schema {data.get('schema')!r}")
    system_label = str(data["system_label"])
    system_dim = int(data["system_dim"])
    sys_layout = SubsystemLayout(((system_label, system_dim),))
    links = []
    for entry in data["links"]:
        label = str(entry["label"])
        dim = int(entry["dim"])
        link_layout = SubsystemLayout(((label, dim),))
        joint = SubsystemLayout(((system_label, system_dim), (label, dim)))
        ready = None
        if "ready" in entry:
            ready = PureState(link_layout, pairs_to_vector(entry["ready"]))
        links.append(
            ChainLink(
                label=label,
                dim=dim,
                unitary=UnitaryOperator(joint, pairs_to_matrix(entry["unitary"])),
                ready=ready,
            )
        )
    return ChainConfig(
        system_label=system_label,
        system_dim=system_dim,
        v=PureState(sys_layout, pairs_to_vector(data["v"])),
        w=PureState(sys_layout, pairs_to_vector(data["w"])),
        links=tuple(links),
    )


def write_json(path: Path | str, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path: Path | str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def save_transfer_spec(spec: TransferSpec, path: Path | str) -> None:
    write_json(path, transfer_spec_to_dict(spec))


def load_transfer_spec(path: Path | str) -> TransferSpec:
    return transfer_spec_from_dict(read_json(path))


def save_chain_config(config: ChainConfig, path: Path | str) -> None:
    write_json(path, chain_config_to_dict(config))


def load_chain_config(path: Path | str) -> ChainConfig:
    return chain_config_from_dict(read_json(path))


def csv_cell(value: Any) -> str:
    """Stable text form: repr for floats (round-trips, '-inf' for the sentinel)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path | str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise InvalidStateError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(csv_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def json_float(value: float) -> float | str:
    """JSON-safe float: infinities become their repr strings."""
    value = float(value)
    if math.isinf(value) or math.isnan(value):
        return repr(value)
    return value


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record: identical manifests imply identical outputs."""

    subcommand: str
    parameters: dict
    seed: int
    version: str
    outputs: tuple[str, ...]
    passed: bool

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "subcommand": self.subcommand,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": self.version,
            "outputs": list(self.outputs),
            "passed": self.passed,
        }


def write_manifest(manifest: RunManifest, path: Path | str) -> None:
    write_json(path, manifest.to_dict())
