"""Sheet persistence: a JSON Lines file with a versioned header.

The first line is the header; every further line is a point or a failure
record.  Floats are written by ``json`` with ``repr`` precision, so a
save/load round trip is lossless.  :func:`save_sheet` writes a canonical file
(points sorted by key) whose bytes depend only on the sheet contents, while
:class:`SheetStore` appends records as they are produced so that an
interrupted run can be resumed.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

from .bifurcation import BranchPoint, Sheet
from .errors import CorruptFileError, PreconditionError, SchemaVersionError

SCHEMA = "hydroelastic.sheet"
SCHEMA_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _header(sheet_or_kind, modes=None, provenance=None) -> dict:
    if isinstance(sheet_or_kind, Sheet):
        kind, modes, provenance = sheet_or_kind.kind, sheet_or_kind.modes, sheet_or_kind.provenance
    else:
        kind = sheet_or_kind
    return {"schema": SCHEMA, "version": SCHEMA_VERSION, "kind": kind,
            "modes": list(modes), "provenance": provenance or {}}


def _point_line(key, pt: BranchPoint) -> str:
    return _dumps({"type": "point", "key": list(key), "point": pt.to_dict()})


def _failure_line(key, message: str) -> str:
    return _dumps({"type": "failure", "key": list(key), "message": message})


def _read_records(path):
    try:
        text = Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError:
        raise CorruptFileError(f"{path}: not UTF-8 text") from None
    if not text:
        raise CorruptFileError(f"{path}: empty file")
    if not text.endswith("\n"):
        raise CorruptFileError(f"{path}: truncated (last record is incomplete)")
    lines = text.split("\n")[:-1]
    records = []
    for n, line in enumerate(lines, 1):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise CorruptFileError(f"{path}:{n}: unreadable record ({exc.msg})") from None
    header = records[0]
    if not isinstance(header, dict) or header.get("schema") != SCHEMA:
        raise CorruptFileError(f"{path}: not a sheet file")
    if header.get("version") != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"{path}: schema version {header.get('version')} is not supported "
            f"(expected {SCHEMA_VERSION})")
    return header, records[1:]


def _sheet_from_records(header, records) -> Sheet:
    sheet = Sheet(header["kind"], tuple(header["modes"]), provenance=header["provenance"])
    for n, rec in enumerate(records, 2):
        try:
            key = tuple(float(v) for v in rec["key"])
            if rec["type"] == "point":
                sheet.points[key] = BranchPoint.from_dict(rec["point"])
            elif rec["type"] == "failure":
                sheet.failures[key] = str(rec["message"])
            else:
                raise KeyError("type")
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptFileError(f"record {n} is malformed ({exc})") from None
    return sheet


def sheet_bytes(sheet: Sheet) -> bytes:
    lines = [_dumps(_header(sheet))]
    lines += [_point_line(k, p) for k, p in sheet.ordered()]
    lines += [_failure_line(k, sheet.failures[k]) for k in sorted(sheet.failures)]
    return ("\n".join(lines) + "\n").encode("utf-8")


def save_sheet(sheet: Sheet, path) -> None:
    """Write ``sheet`` canonically (atomic replace)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(sheet_bytes(sheet))
    os.replace(tmp, path)


def load_sheet(path) -> Sheet:
    header, records = _read_records(path)
    return _sheet_from_records(header, records)


class SheetStore:
    """Append-only record of a sheet computation.

    Opening an existing file resumes it: its points and failures are loaded
    and new records are appended.  The header of an existing file must match
    the requested kind, modes and provenance.
    """

    def __init__(self, path, kind: str, modes, provenance: dict | None = None):
        self.path = Path(path)
        self.header = _header(kind, modes, provenance)
        self.points: dict = {}
        self.failures: dict = {}
        if self.path.exists() and self.path.stat().st_size > 0:
            header, records = _read_records(self.path)
            for field in ("kind", "modes", "provenance"):
                if header[field] != json.loads(_dumps(self.header[field])):
                    raise PreconditionError(
                        f"{self.path}: existing file has a different {field}; refusing to resume")
            sheet = _sheet_from_records(header, records)
            self.points, self.failures = sheet.points, sheet.failures
        else:
            self._write(_dumps(self.header))

    def _write(self, line: str):
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()

    def append(self, key, pt: BranchPoint):
        self.points[tuple(key)] = pt
        self._write(_point_line(key, pt))

    def append_failure(self, key, message: str):
        self.failures[tuple(key)] = message
        self._write(_failure_line(key, message))


CSV_FIXED = ["t1", "t2", "lambda1", "lambda2", "residual_norm", "newton_iters"]


def sheet_csv(sheet: Sheet, n_coeffs: int = 8) -> str:
    """One row per point: amplitudes, lambda, diagnostics and the leading
    cosine coefficients.  Simple and special sheets report t2 = 0."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIXED + [f"a{j}" for j in range(1, n_coeffs + 1)])
    for key, p in sheet.ordered():
        t1, t2 = (key[0], key[1]) if sheet.kind == "general" else (key[0], 0.0)
        row = [t1, t2, p.lam[0], p.lam[1], p.residual_norm, p.newton_iters]
        row += [float(c) for c in p.coeffs[:n_coeffs]]
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_sheet_csv(sheet: Sheet, path, n_coeffs: int = 8) -> None:
    Path(path).write_text(sheet_csv(sheet, n_coeffs), encoding="utf-8")
