"""Deterministic writers for tables, JSON objects, field snapshots and metrics."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .dynamics import Snapshot
from .errors import ConfigError
from .geometry import MetricField
from .lattice import LatticeGrid
from .params import BHParams

SNAPSHOT_SCHEMA = "bhanalog.snapshot/1"
FORMATS = ("csv", "json", "bin")


def fmt(x) -> str:
    """Shortest round-trip text for a float (``repr``), fixed across runs."""
    return repr(float(x))


def write_csv(path: Path, header, rows) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path):
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
    return header, data


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def write_atomic(path: Path, text: str) -> Path:
    """Write via a temporary file in the same directory and rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _grid_dict(grid: LatticeGrid) -> dict:
    return {"shape": list(grid.shape), "a": grid.a, "boundary": grid.boundary}


def _params_dict(p: BHParams) -> dict:
    s = p.schedule
    return {"J0": p.J0, "U": p.U, "mu": p.mu, "a": p.a,
            "schedule": {"kind": s.kind, "H": s.H, "eps": s.eps, "nu": s.nu}}


def write_snapshot(stem: Path, snap: Snapshot, grid: LatticeGrid, p: BHParams, fmt_: str = "csv") -> list[Path]:
    """JSON header ``<stem>.json`` plus a payload ``<stem>.csv`` / ``<stem>.bin``.

    With ``json`` the values are inlined in the header and no payload is written.
    The binary payload is little-endian complex128, C order, one block per field.
    """
    if fmt_ not in FORMATS:
        raise ConfigError(f"unknown snapshot format {fmt_!r}")
    fields = {"mean": snap.mean}
    if snap.fluct is not None:
        fields["fluct"] = snap.fluct
    header = {
        "schema": SNAPSHOT_SCHEMA,
        "grid": _grid_dict(grid),
        "params": _params_dict(p),
        "t": snap.t,
        "fields": list(fields),
        "format": fmt_,
    }
    stem = Path(stem)
    out = []
    if fmt_ == "json":
        header["values"] = {k: {"re": np.ravel(v.real).tolist(), "im": np.ravel(v.imag).tolist()}
                            for k, v in fields.items()}
    elif fmt_ == "csv":
        payload = stem.with_suffix(".csv")
        idx = np.indices(grid.shape).reshape(grid.dims, -1).T
        cols = ["ijk"[d] for d in range(grid.dims)]
        for k in fields:
            cols += [f"{k}_re", f"{k}_im"]
        flat = [np.ravel(v) for v in fields.values()]
        rows = []
        for s in range(grid.size):
            row = [str(int(i)) for i in idx[s]]
            for v in flat:
                row += [fmt(v[s].real), fmt(v[s].imag)]
            rows.append(row)
        out.append(write_csv(payload, cols, rows))
        header["payload"] = payload.name
    else:
        payload = stem.with_suffix(".bin")
        with open(payload, "wb") as fh:
            for v in fields.values():
                fh.write(np.ascontiguousarray(v, dtype="<c16").tobytes())
        header["payload"] = payload.name
        header["dtype"] = "<c16"
        header["order"] = "C"
        out.append(payload)
    out.insert(0, write_json(stem.with_suffix(".json"), header))
    return out


def read_snapshot(header_path: Path) -> tuple[dict, dict]:
    """Inverse of :func:`write_snapshot`; returns ``(header, {field: array})``."""
    header_path = Path(header_path)
    header = json.loads(header_path.read_text())
    shape = tuple(header["grid"]["shape"])
    names = header["fields"]
    if header["format"] == "json":
        vals = header.pop("values")
        return header, {k: (np.array(vals[k]["re"]) + 1j * np.array(vals[k]["im"])).reshape(shape) for k in names}
    payload = header_path.parent / header["payload"]
    if header["format"] == "bin":
        raw = np.frombuffer(payload.read_bytes(), dtype=header["dtype"])
        size = int(np.prod(shape))
        return header, {k: raw[i * size:(i + 1) * size].astype(complex).reshape(shape) for i, k in enumerate(names)}
    cols, data = read_csv(payload)
    return header, {k: (data[:, cols.index(f"{k}_re")] + 1j * data[:, cols.index(f"{k}_im")]).reshape(shape)
                    for k in names}


def write_metric(stem: Path, m: MetricField, fmt_: str = "csv") -> Path:
    """JSON with per-site matrices, or CSV with the flattened upper triangle."""
    grid = m.grid
    D1 = m.dims_spacetime
    iu = np.triu_indices(D1)
    if fmt_ == "json":
        obj = {
            "kind": m.kind,
            "t": m.t,
            "grid": _grid_dict(grid),
            "conformal": np.ravel(m.conformal).tolist(),
            "g": m.g.reshape(-1, D1, D1).tolist(),
            "det": np.ravel(m.det()).tolist(),
        }
        return write_json(Path(stem).with_suffix(".json"), obj)
    idx = np.indices(grid.shape).reshape(grid.dims, -1).T
    g = m.g.reshape(-1, D1, D1)
    det = np.ravel(m.det())
    cols = ["ijk"[d] for d in range(grid.dims)] + [f"g{a}{b}" for a, b in zip(*iu)] + ["det"]
    rows = [[str(int(i)) for i in idx[s]] + [fmt(v) for v in g[s][iu]] + [fmt(det[s])] for s in range(grid.size)]
    return write_csv(Path(stem).with_suffix(".csv"), cols, rows)
