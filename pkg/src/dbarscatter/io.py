"""Field dumps, CSV diagnostics, and JSON run configuration.

Dump format: one ASCII header line ``DBARFIELD v1 n=<n> L=<L>`` followed by
n*n little-endian float64 (re, im) pairs, row-major.  Identical inputs produce
byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .fields import ScalarField
from .grids import GridSpec

__all__ = [
    "write_field_dump",
    "read_field_dump",
    "write_kv_csv",
    "write_table_csv",
    "ConfigError",
    "DEFAULT_CONFIG",
    "load_config",
    "merge_config",
    "config_hash",
]

_MAGIC = "DBARFIELD v1"


def write_field_dump(path, f: ScalarField) -> None:
    path = Path(path)
    header = f"{_MAGIC} n={f.grid.n} L={f.grid.half_width!r}\n"
    payload = np.empty((f.grid.n, f.grid.n, 2), dtype="<f8")
    payload[..., 0] = f.values.real
    payload[..., 1] = f.values.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload.tobytes())


def read_field_dump(path) -> ScalarField:
    path = Path(path)
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        parts = header.split()
        if parts[:2] != _MAGIC.split() or len(parts) != 4:
            raise ValueError(f"{path}: not a {_MAGIC} dump")
        n = int(parts[2].split("=", 1)[1])
        L = float(parts[3].split("=", 1)[1])
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 2 * n * n:
        raise ValueError(f"{path}: payload size mismatch")
    vals = raw.reshape(n, n, 2)
    return ScalarField(GridSpec(L, n), vals[..., 0] + 1j * vals[..., 1])


def write_kv_csv(path, rows) -> None:
    """key,value diagnostic rows; accepts a dict or an iterable of pairs."""
    items = rows.items() if isinstance(rows, dict) else rows
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "value"])
        for k, v in items:
            if isinstance(v, (float, np.floating)):
                v = repr(float(v))
            elif isinstance(v, np.integer):
                v = int(v)
            w.writerow([k, v])


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG = {
    "grid": {"L": 6.0, "n": 128},
    "zgrid": "dual",
    "potential": {"kind": "gaussian", "amplitude": 1.0, "symmetry": "hermitian", "seed": 0},
    "solver": {"tol": 1e-8, "max_iter": 200, "far_zone": "solve"},
    "evolve": {"times": [0.1, 1.0]},
    "estimates": {"jmax": 20, "ensemble_size": 50, "seed": 1234},
}


def merge_config(overrides: dict | None) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    for key, val in (overrides or {}).items():
        if isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    _validate(cfg)
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return merge_config(data)


def _validate(cfg: dict) -> None:
    try:
        g = cfg["grid"]
        GridSpec(float(g["L"]), int(g["n"]))
        if cfg["zgrid"] != "dual":
            zg = cfg["zgrid"]
            GridSpec(float(zg["L"]), int(zg["n"]))
        pot = cfg["potential"]
        if pot["kind"] not in ("gaussian", "bump", "random-smooth"):
            raise ConfigError(f"unknown potential kind {pot['kind']!r}")
        if pot["symmetry"] not in ("none", "hermitian", "skew"):
            raise ConfigError(f"unknown symmetry {pot['symmetry']!r}")
        if float(pot["amplitude"]) < 0:
            raise ConfigError("amplitude must be >= 0")
        sol = cfg["solver"]
        if float(sol["tol"]) <= 0 or int(sol["max_iter"]) < 1:
            raise ConfigError("solver tol must be > 0 and max_iter >= 1")
        fz = sol.get("far_zone", "solve")
        if not (fz in ("solve", "auto") or isinstance(fz, (int, float))):
            raise ConfigError(f"bad far_zone {fz!r}")
        times = cfg["evolve"]["times"]
        if not all(isinstance(t, (int, float)) for t in times):
            raise ConfigError("evolve.times must be numbers")
        est = cfg["estimates"]
        if int(est["jmax"]) < 1 or int(est["ensemble_size"]) < 1:
            raise ConfigError("estimates jmax and ensemble_size must be >= 1")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
