"""File formats: payoff CSV, isotonic CSV, solution JSON and plot-ready TSVs.

Floats are written with ``repr``, the shortest string that parses back to
the same double, so every file round-trips losslessly.  All writers replace
the target atomically.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._exceptions import DataError, StructuralError
from .coalitions import PayoffTable

PAYOFF_HEADER = ("mask", "value")
ISOTONIC_HEADER = ("value", "weight")


def fmt(x) -> str:
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _rows(path, what: str):
    """``(line_number, fields)`` for every non-blank line, header included."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {what} file {path}: {exc.strerror}") from exc
    lines = list(csv.reader(io.StringIO(text)))
    numbered = [(i + 1, [c.strip() for c in row]) for i, row in enumerate(lines) if any(c.strip() for c in row)]
    if not numbered:
        raise DataError(f"{path}: empty {what} file")
    return numbered


def _float(text: str, lineno: int, path, column: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: {column} {text!r} is not a number") from None
    if not np.isfinite(x):
        raise DataError(f"{path}:{lineno}: {column} must be finite, got {text!r}")
    return x


def read_payoff_csv(path, p: int | None = None) -> PayoffTable:
    """Parse a ``mask,value`` CSV into a :class:`PayoffTable`.

    ``p`` defaults to the bit length of the largest mask (the grand coalition
    must be present).  Errors carry the offending line number.
    """
    rows = _rows(path, "payoff")
    lineno, header = rows[0]
    if tuple(h.lower() for h in header) != PAYOFF_HEADER:
        raise DataError(f"{path}:{lineno}: expected header 'mask,value', got {','.join(header)!r}")
    masks, values, seen = [], [], {}
    for lineno, fields in rows[1:]:
        if len(fields) != 2:
            raise DataError(f"{path}:{lineno}: expected 2 fields, got {len(fields)}")
        try:
            m = int(fields[0])
        except ValueError:
            raise DataError(f"{path}:{lineno}: mask {fields[0]!r} is not an integer") from None
        if m < 0:
            raise DataError(f"{path}:{lineno}: mask must be non-negative, got {m}")
        if m in seen:
            raise DataError(f"{path}:{lineno}: duplicate mask {m} (first on line {seen[m]})")
        seen[m] = lineno
        masks.append(m)
        values.append(_float(fields[1], lineno, path, "value"))
    if not masks:
        raise DataError(f"{path}: no payoff rows after the header")
    if 0 not in seen:
        raise DataError(f"{path}: missing the empty coalition (mask 0); its payoff is required")
    if p is None:
        p = max(masks).bit_length()
    try:
        return PayoffTable.from_pairs(np.array(masks, dtype=np.int64), np.array(values), p=p)
    except (StructuralError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def payoff_csv_text(table: PayoffTable) -> str:
    out = ["mask,value"]
    out += [f"{int(m)},{fmt(v)}" for m, v in zip(table.masks, table.values)]
    return "\n".join(out) + "\n"


def write_payoff_csv(path, table: PayoffTable) -> None:
    atomic_write_text(path, payoff_csv_text(table))


def read_isotonic_csv(path):
    """Parse ``value,weight[,key]``; returns ``(values, weights, keys or None)``.

    Without a key column the row order is the ordering.
    """
    rows = _rows(path, "isotonic")
    lineno, header = rows[0]
    names = tuple(h.lower() for h in header)
    if names[:2] != ISOTONIC_HEADER or len(names) > 3 or (len(names) == 3 and names[2] != "key"):
        raise DataError(f"{path}:{lineno}: expected header 'value,weight' or 'value,weight,key'")
    cols = len(names)
    data = []
    for lineno, fields in rows[1:]:
        if len(fields) != cols:
            raise DataError(f"{path}:{lineno}: expected {cols} fields, got {len(fields)}")
        data.append([_float(f, lineno, path, n) for f, n in zip(fields, names)])
    if not data:
        raise DataError(f"{path}: no rows after the header")
    arr = np.array(data)
    keys = arr[:, 2] if cols == 3 else None
    return arr[:, 0], arr[:, 1], keys


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(v)


def columns_text(header, columns) -> str:
    """Delimited text from aligned columns; tab-separated if the header is."""
    sep = "\t" if "\t" in header else ","
    lines = [header] + [sep.join(_cell(v) for v in row) for row in zip(*columns)]
    return "\n".join(lines) + "\n"


def dumps_json(doc) -> str:
    return json.dumps(_plain(doc), indent=2, allow_nan=False) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, doc) -> None:
    atomic_write_text(path, dumps_json(doc))


@dataclass
class RunManifest:
    command: str
    options: dict
    inputs: dict = field(default_factory=dict)  # file name -> sha256
    seed: int = 0
    version: str = ""
    wall_time: float = 0.0

    def add_input(self, path) -> None:
        self.inputs[Path(path).name] = sha256_file(path)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "options": self.options,
            "inputs": dict(sorted(self.inputs.items())),
            "seed": self.seed,
            "version": self.version,
            "wall_time": self.wall_time,
        }


def solution_document(solution, options: dict, ric=None, manifest: RunManifest | None = None) -> dict:
    doc = {
        "p": solution.p,
        "s": solution.s,
        "gamma": solution.gamma,
        "support": solution.support,
        "beta": solution.beta,
        "baseline": solution.baseline,
        "transform": {"nu": solution.nu, "t": solution.t},
        "objective": solution.objective,
        "outer_iterations": solution.outer_iterations,
        "inner_iterations": solution.inner_iterations,
        "converged": solution.converged,
        "options": options,
    }
    if ric is not None:
        doc["ric"] = {
            "selected": ric.selected,
            "s": ric.s_values,
            "score": ric.scores,
            "objective": ric.objectives,
            "sigma2": ric.sigma2,
            "formula": ric.formula,
        }
    if manifest is not None:
        doc["manifest"] = manifest.to_dict()
    return doc


def transform_tsv_text(nu, t) -> str:
    return columns_text("nu\tt_hat", [nu, t])
