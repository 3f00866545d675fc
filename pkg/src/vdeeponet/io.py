"""File formats: CSV snapshots, sensor/energy tables, manifests, checkpoints.

Floats are serialized with ``repr``, the shortest decimal that round-trips a
64-bit value (never more than 17 significant digits), so every file parses
back losslessly and reruns are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import ArgumentError, VdonError


class IOFailure(VdonError):
    """Filesystem-level failure while reading or writing artifacts."""


def fmt(x: float) -> str:
    return repr(float(x))


def write_csv(path, header, columns) -> None:
    columns = [np.asarray(c, dtype=np.float64) for c in columns]
    names = header.split(",")
    if len(columns) != len(names):
        raise ArgumentError(f"header '{header}' does not match "
                            f"{len(columns)} columns")
    n = columns[0].shape[0]
    if any(c.shape != (n,) for c in columns):
        raise ArgumentError("CSV columns must be equal-length 1-D arrays")
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(header + "\n")
            for i in range(n):
                fh.write(",".join(fmt(c[i]) for c in columns) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_csv(path, expected_header=None) -> np.ndarray:
    try:
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if expected_header is not None and header != expected_header:
                raise ArgumentError(f"{path}: header '{header}' != "
                                    f"'{expected_header}'")
            rows = [line.split(",") for line in fh if line.strip()]
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    return np.array(rows, dtype=np.float64)


def write_fields_csv(path, points, u, v, phi) -> None:
    write_csv(path, "x,y,u,v,phi", [points[:, 0], points[:, 1], u, v, phi])


def read_fields_csv(path):
    data = read_csv(path, "x,y,u,v,phi")
    return data[:, :2], data[:, 2], data[:, 3], data[:, 4]


def write_sensors_csv(path, points) -> None:
    write_csv(path, "x,y", [points[:, 0], points[:, 1]])


def read_sensors_csv(path) -> np.ndarray:
    return read_csv(path, "x,y")


def write_energy_csv(path, points, psi_plus) -> None:
    write_csv(path, "x,y,psi_plus", [points[:, 0], points[:, 1], psi_plus])


def read_energy_csv(path):
    data = read_csv(path, "x,y,psi_plus")
    return data[:, :2], data[:, 2]


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, payload: dict, hashed_files) -> dict:
    """Write a manifest JSON with a content hash over the listed files."""
    base = os.path.dirname(os.path.abspath(path))
    entries = {}
    for name in sorted(hashed_files):
        entries[name] = file_sha256(os.path.join(base, name))
    combined = hashlib.sha256(
        json.dumps(entries, sort_keys=True).encode()).hexdigest()
    manifest = dict(payload)
    manifest["files"] = entries
    manifest["content_hash"] = combined
    try:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc
    return manifest


def read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc


def write_json(path, payload: dict) -> None:
    try:
        with open(path, "w", encoding="ascii") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc
