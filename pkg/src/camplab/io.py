"""Configuration files, CSV tables and run manifests.

A configuration is a JSON object::

    {"command": "ns", "params": {"delta": 0.25, "rho": 0.2},
     "output_path": "out/ns.csv", "master_seed": 0, "threads": 1}

The document shape is checked against :data:`CONFIG_SCHEMA` and the
``params`` against the per-command table :data:`COMMAND_PARAMS`: unknown
keys, missing required keys and wrongly typed values are all errors naming
the key. Tables are RFC 4180 CSV with a header row; floats are written with
17 significant digits so they parse back to the same doubles.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError

__all__ = [
    "COMMANDS",
    "COMMAND_PARAMS",
    "CONFIG_SCHEMA",
    "CliConfig",
    "validate_params",
    "read_config",
    "write_config",
    "format_value",
    "write_table",
    "read_table",
    "write_manifest",
]

REQUIRED = object()

# key -> (kind, default); kind is one of float, int, str, bool, "floats", "strs"
COMMAND_PARAMS = {
    "phase-curve": {
        "deltas": (int, 33),
        "delta_min": (float, None),
        "delta_max": (float, None),
    },
    "minimax": {
        "eps_points": (int, 101),
    },
    "ns": {
        "delta": (float, REQUIRED),
        "rho": (float, REQUIRED),
    },
    "se": {
        "delta": (float, REQUIRED),
        "rho": (float, REQUIRED),
        "sigma": (float, 0.0),
        "tau": (float, 2.0),
        "coeff_kind": (str, "up"),
        "gamma": (float, 1.0),
        "t_max": (int, 100),
        "tol": (float, 1e-10),
    },
    "solve": {
        "instance": (str, None),
        "delta": (float, 0.25),
        "rho": (float, 0.1),
        "N": (int, 1000),
        "ensemble": (str, "gaussian"),
        "coeff_kind": (str, "up"),
        "sigma": (float, 0.0),
        "solver": (str, "camp"),
        "tau": (float, 2.0),
        "lambda": (float, None),
        "max_iters": (int, 3000),
        "stop_tol": (float, 1e-10),
        "onsager_mode": (str, "mean_field"),
        "npi_estimator": (str, "residual_energy"),
        "save_instance": (str, None),
    },
    "mc-phase": {
        "N": (int, 1000),
        "trials": (int, 20),
        "deltas": ("floats", (0.3,)),
        "rho_half_width": (float, 0.2),
        "rho_points": (int, 41),
        "tol": (float, 1e-4),
        "solver": (str, "camp"),
        "ensemble": (str, "gaussian"),
        "coeff_kind": (str, "up"),
        "max_iters": (int, 3000),
    },
    "universality": {
        "delta": (float, 0.25),
        "rho": (float, 0.1),
        "tau": (float, 2.0),
        "N": (int, 1000),
        "sigma_min": (float, 1e-3),
        "sigma_max": (float, 0.1),
        "sigma_points": (int, 50),
        "pairs": ("strs", ("gaussian:rademacher", "gaussian:ternary")),
        "coeff_kind": (str, "up"),
        "max_iters": (int, 1000),
        "redraw_per_sigma": (bool, False),
    },
    "se-vs-camp": {
        "delta": (float, 0.25),
        "rho": (float, 0.1),
        "sigma": (float, 0.1),
        "tau": (float, 2.0),
        "N": (int, 2000),
        "coeff_kind": (str, "up"),
        "ensemble": (str, "gaussian"),
        "seeds": (int, 10),
        "t_max": (int, 20),
    },
    "calibrate": {
        "tau": (float, 2.0),
        "delta": (float, 0.25),
        "rho": (float, 0.1),
        "sigma": (float, 0.1),
        "coeff_kind": (str, "up"),
        "scale": (str, "npi"),
        "compare": (bool, False),
        "N": (int, 2000),
        "seeds": (int, 10),
    },
}
COMMANDS = tuple(COMMAND_PARAMS)

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "params": {"type": "object"},
        "output_path": {"type": ["string", "null"]},
        "master_seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
    },
    "required": ["command"],
    "additionalProperties": False,
}


@dataclass
class CliConfig:
    command: str
    params: dict = field(default_factory=dict)
    output_path: str | None = None
    master_seed: int = 0
    threads: int = 1

    def to_dict(self):
        return {"command": self.command, "params": dict(self.params), "output_path": self.output_path,
                "master_seed": self.master_seed, "threads": self.threads}

    @classmethod
    def from_dict(cls, doc):
        validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        if errors:
            e = errors[0]
            key = e.path[-1] if e.path else _offending_key(e)
            msgs = "; ".join(f"{'/'.join(map(str, x.path)) or '<root>'}: {x.message}" for x in errors)
            raise ConfigError(f"invalid config: {msgs}", key=key)
        params = validate_params(doc["command"], doc.get("params", {}))
        return cls(command=doc["command"], params=params, output_path=doc.get("output_path"),
                   master_seed=int(doc.get("master_seed", 0)), threads=int(doc.get("threads", 1)))


def _offending_key(err):
    if err.validator == "additionalProperties":
        extra = set(err.instance) - set(err.schema.get("properties", {}))
        return sorted(extra)[0] if extra else None
    if err.validator == "required":
        return err.message.split("'")[1] if "'" in err.message else None
    return None


def _coerce(kind, key, value):
    bad = ConfigError(f"parameter {key!r}: cannot use {value!r} as {getattr(kind, '__name__', kind)}", key=key)
    if kind is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        raise bad
    if kind is int:
        if isinstance(value, bool):
            raise bad
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                raise bad from None
        raise bad
    if kind is float:
        if isinstance(value, bool):
            raise bad
        try:
            out = float(value)
        except (TypeError, ValueError):
            raise bad from None
        if math.isnan(out):
            raise bad
        return out
    if kind is str:
        if not isinstance(value, str):
            raise bad
        return value
    if kind == "floats":
        seq = value if isinstance(value, (list, tuple)) else [value]
        return tuple(_coerce(float, key, v) for v in seq)
    if kind == "strs":
        seq = value if isinstance(value, (list, tuple)) else [value]
        return tuple(_coerce(str, key, v) for v in seq)
    raise AssertionError(kind)


def validate_params(command, params):
    """Check ``params`` for ``command`` and fill in defaults.

    Raises
    ------
    ConfigError
        Unknown command, unknown key, missing required key or bad value;
        ``.key`` names the offending entry.
    """
    if command not in COMMAND_PARAMS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}", key="command")
    if not isinstance(params, dict):
        raise ConfigError("params must be an object", key="params")
    table = COMMAND_PARAMS[command]
    for key in params:
        if key not in table:
            raise ConfigError(f"unknown parameter {key!r} for command {command!r}", key=key)
    out = {}
    for key, (kind, default) in table.items():
        if key in params and params[key] is not None:
            out[key] = _coerce(kind, key, params[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required parameter {key!r} for command {command!r}", key=key)
        else:
            out[key] = default
    return out


def read_config(path):
    """Load and validate a JSON configuration file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})", key=None) from None
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}", key=None) from None
    return CliConfig.from_dict(doc)


def _jsonable(v):
    # strict JSON: no Infinity/NaN literals, no numpy scalars, lists for tuples
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_config(cfg, path):
    doc = _jsonable(cfg.to_dict())
    doc["params"] = {k: v for k, v in doc["params"].items() if v is not None}
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def format_value(v):
    """CSV cell text: floats with 17 significant digits, ``inf``/``nan`` spelled out."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if hasattr(v, "dtype"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(rows, schema, path):
    """Write ``rows`` (mappings) as CSV with header ``schema``, atomically.

    Missing parent directories are created. Keys outside ``schema`` are an
    error so a table never silently drops a column.
    """
    schema = list(schema)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(schema)
    for row in rows:
        extra = set(row) - set(schema)
        if extra:
            raise ConfigError(f"row has columns outside the schema: {sorted(extra)}", key=sorted(extra)[0])
        writer.writerow([format_value(row.get(k, "")) for k in schema])
    _atomic_write(path, buf.getvalue())
    return Path(path)


def read_table(path):
    """Read a CSV table back as a list of string-valued dicts."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_manifest(output_path, cfg, version, extra=None):
    """Write ``<output>.manifest.json`` with the full config, seed and version.

    No timestamps or host names go in, so a rerun reproduces it byte for byte.
    """
    import numpy
    import scipy

    doc = {
        "config": _jsonable(cfg.to_dict()),
        "master_seed": cfg.master_seed,
        "threads": cfg.threads,
        "camplab_version": version,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
    }
    if extra:
        doc["results"] = _jsonable(extra)
    path = Path(str(output_path) + ".manifest.json")
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path
