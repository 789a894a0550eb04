"""Solution files: TOML with built pads, run-length-encoded switching
patterns, status, objective and the provenance needed to re-run the solve."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import tomli_w

from padplan.chargeflow import PadAssignment
from padplan.network import NetworkInstance, atomic_write

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SOLUTION_SCHEMA = 1


class SolutionError(ValueError):
    pass


def rle_encode(bits) -> str:
    """``[1,1,0,1]`` -> ``"1*2 0*1 1*1"``."""
    bits = [int(b) for b in bits]
    if not bits:
        return ""
    runs = []
    cur, count = bits[0], 1
    for b in bits[1:]:
        if b == cur:
            count += 1
        else:
            runs.append(f"{cur}*{count}")
            cur, count = b, 1
    runs.append(f"{cur}*{count}")
    return " ".join(runs)


def rle_decode(text: str) -> list[int]:
    out: list[int] = []
    for run in text.split():
        try:
            val, count = run.split("*")
            v, n = int(val), int(count)
        except ValueError:
            raise SolutionError(f"bad run {run!r}") from None
        if v not in (0, 1) or n < 1:
            raise SolutionError(f"bad run {run!r}")
        out.extend([v] * n)
    return out


@dataclass
class SolutionRecord:
    status: str
    objective: float | None
    assignment: PadAssignment | None
    provenance: dict[str, Any] = field(default_factory=dict)


def solution_document(inst: NetworkInstance, record: SolutionRecord) -> dict:
    doc: dict[str, Any] = {
        "schema": SOLUTION_SCHEMA,
        "status": record.status,
    }
    if record.objective is not None:
        doc["objective"] = float(record.objective)
    doc["instance"] = inst.name
    doc["horizon"] = inst.horizon
    if inst.seed is not None:
        doc["seed"] = int(inst.seed)
    doc["provenance"] = dict(record.provenance)
    a = record.assignment
    if a is not None:
        doc["pads"] = [
            {"route": inst.routes[r].key, "site": int(m) + 1, "length": int(l) + 1}
            for r, m, l in a.selected_sites()
        ]
        doc["switching"] = {
            inst.routes[r].key: rle_encode(a.p[r]) for r in range(inst.num_routes)
        }
    return doc


def dumps_solution(inst: NetworkInstance, record: SolutionRecord) -> str:
    return "# padplan solution\n" + tomli_w.dumps(solution_document(inst, record))


def save_solution(path: str | os.PathLike, inst: NetworkInstance, record: SolutionRecord) -> None:
    atomic_write(path, dumps_solution(inst, record))


def load_solution(path: str | os.PathLike, inst: NetworkInstance) -> SolutionRecord:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SolutionError(f"{path}: {exc}") from None
    return solution_from_document(doc, inst)


def solution_from_document(doc: dict, inst: NetworkInstance) -> SolutionRecord:
    if doc.get("schema") != SOLUTION_SCHEMA:
        raise SolutionError(f"unsupported solution schema {doc.get('schema')!r}")
    if int(doc.get("horizon", inst.horizon)) != inst.horizon:
        raise SolutionError(
            f"solution covers {doc.get('horizon')} periods but the instance has {inst.horizon}"
        )
    status = str(doc.get("status", ""))
    objective = doc.get("objective")
    assignment = None
    if "pads" in doc or "switching" in doc:
        R, M, L, T = inst.num_routes, inst.sites_per_route, inst.lengths, inst.horizon
        x = np.zeros((R, M, L), dtype=np.int8)
        for pad in doc.get("pads", []):
            try:
                r = inst.route_index(pad["route"])
            except ValueError:
                raise SolutionError(f"unknown route {pad.get('route')!r}") from None
            m, l = int(pad["site"]) - 1, int(pad["length"]) - 1
            if not (0 <= m < M and 0 <= l < L):
                raise SolutionError(f"pad outside the instance: {pad}")
            x[r, m, l] = 1
        p = np.zeros((R, T), dtype=np.int8)
        for key, text in doc.get("switching", {}).items():
            try:
                r = inst.route_index(key)
            except ValueError:
                raise SolutionError(f"unknown route {key!r}") from None
            bits = rle_decode(text)
            if len(bits) != T:
                raise SolutionError(f"route {key}: {len(bits)} periods, expected {T}")
            p[r] = bits
        try:
            assignment = PadAssignment(x, p)
        except ValueError as exc:
            raise SolutionError(str(exc)) from None
    return SolutionRecord(status, objective, assignment, dict(doc.get("provenance", {})))
