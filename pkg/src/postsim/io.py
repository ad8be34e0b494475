"""JSON file formats.

Matrices are nested lists of ``[re, im]`` pairs in row-major order. Outcome
labels and partition blocks on disk are 1-based.

POVM::

    {"dim": d, "outcomes": n, "effects": [n matrices d x d],
     "label": "...", "generator_unitary": n x k matrix (optional)}

State::

    {"dim": d, "rho": d x d matrix}
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .povm import Povm, QuantumState, StructuralError
from .scheme import NaimarkDilation, Partition, SchemeResult


def encode_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def decode_matrix(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise StructuralError(f"matrix must be rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def povm_to_dict(povm: Povm) -> dict:
    out = {
        "dim": povm.dim,
        "outcomes": povm.n_outcomes,
        "effects": [encode_matrix(e) for e in povm.effects],
    }
    if povm.label:
        out["label"] = povm.label
    if povm.generator is not None:
        out["generator_unitary"] = encode_matrix(povm.generator)
    return out


def povm_from_dict(data: dict, check: bool = True) -> Povm:
    try:
        d, n = int(data["dim"]), int(data["outcomes"])
        effects = [decode_matrix(e) for e in data["effects"]]
    except KeyError as exc:
        raise StructuralError(f"POVM document lacks field {exc}") from None
    if len(effects) != n or any(e.shape != (d, d) for e in effects):
        raise StructuralError(f"expected {n} effects of shape {d}x{d}")
    gen = data.get("generator_unitary")
    gen = decode_matrix(gen) if gen is not None else None
    return Povm(effects, label=data.get("label"), generator=gen, check=check)


def state_to_dict(state: QuantumState) -> dict:
    return {"dim": state.dim, "rho": encode_matrix(state.rho)}


def state_from_dict(data: dict) -> QuantumState:
    rho = decode_matrix(data["rho"])
    if rho.shape != (int(data["dim"]),) * 2:
        raise StructuralError("rho shape does not match dim")
    return QuantumState(rho)


def scheme_to_dict(result: SchemeResult) -> dict:
    out = povm_to_dict(result.target)
    out["scheme"] = {
        "m": result.partition.m,
        "partition": result.partition.labels(),
        "lambdas": [float(x) for x in result.lambdas],
        "mix_probs": [float(x) for x in result.mix_probs],
        "q_succ": result.q_succ,
    }
    return out


def partition_from_dict(scheme: dict, n: int) -> Partition:
    return Partition.from_labels(scheme["partition"], n, int(scheme["m"]) - 1)


def dilation_to_dict(dil: NaimarkDilation, with_unitary: bool = True) -> dict:
    out = {
        "source_dim": dil.source.dim,
        "big_dim": dil.big_dim,
        "rank_dim": dil.rank_dim,
        "isometry": encode_matrix(dil.isometry),
        "groups": [[k + 1 for k in g] for g in dil.groups],
        "padding": [k + 1 for k in dil.padding],
        "warnings": list(dil.warnings),
    }
    if with_unitary:
        out["completed_unitary"] = encode_matrix(dil.completed_unitary())
    return out


def write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=1) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def read_povm(path, check: bool = True) -> Povm:
    return povm_from_dict(read_json(path), check=check)


def write_povm(path, povm: Povm) -> None:
    write_json(path, povm_to_dict(povm))


def read_state(path) -> QuantumState:
    return state_from_dict(read_json(path))


def write_state(path, state: QuantumState) -> None:
    write_json(path, state_to_dict(state))
