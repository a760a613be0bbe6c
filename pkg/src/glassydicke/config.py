"""Flat key=value run configuration.

Resolution order, later wins: built-in defaults, ``--config`` file,
``GLASSYDICKE_<KEY>`` environment variables, explicit command-line flags.

A config file is plain ``key = value`` lines with ``#`` comments. Output files
echo their resolved config on ``#! key=value`` lines (CSV) or under a
``"config"`` object (JSON); either can be passed back as ``--config``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

ENV_PREFIX = "GLASSYDICKE_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    type: Callable[[str], Any]
    default: Any
    help: str = ""


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text) -> tuple[float, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def format_value(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    return str(v)


def read_config_file(path: str | Path) -> dict[str, str]:
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        cfg = data.get("config", data)
        return {str(k): format_value(v) if not isinstance(v, str) else v for k, v in cfg.items()}
    lines = text.splitlines()
    echoed = [ln[2:] for ln in lines if ln.startswith("#!")]
    if echoed:
        lines = echoed
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip() if not echoed else raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve(keys: Mapping[str, Key], command: str, file_values: Mapping[str, str] | None,
            flag_values: Mapping[str, Any], environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    """Merge the layers and convert types; unknown or malformed keys raise ConfigError."""
    environ = os.environ if environ is None else environ
    cfg = {k: spec.default for k, spec in keys.items()}

    def put(k: str, raw: Any, source: str):
        if k not in keys:
            raise ConfigError(f"unknown config key {k!r} for '{command}' (from {source})")
        try:
            cfg[k] = keys[k].type(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k!r} from {source}: {raw!r} ({exc})") from None

    for k, v in (file_values or {}).items():
        if k == "command":
            if v != command:
                raise ConfigError(f"config file was written by '{v}', not '{command}'")
            continue
        put(k, v, "config file")
    for k in keys:
        env = environ.get(ENV_PREFIX + k.upper())
        if env is not None:
            put(k, env, f"${ENV_PREFIX}{k.upper()}")
    for k, v in flag_values.items():
        if v is not None:
            put(k, v, "command line")
    return cfg


def echo_lines(command: str, cfg: Mapping[str, Any]) -> list[str]:
    lines = [f"command={command}"]
    lines += [f"{k}={format_value(v)}" for k, v in cfg.items() if v is not None]
    return lines


def echo_dict(command: str, cfg: Mapping[str, Any]) -> dict[str, Any]:
    d = {"command": command}
    d.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.items() if v is not None})
    return d


# --- key tables per subcommand -------------------------------------------------

MODEL = {
    "n": Key(int, 8, "number of qubits N"),
    "lambda": Key(float, 0.0, "qubit-cavity coupling"),
    "j0": Key(float, 0.0, "mean coupling scale J0"),
    "j": Key(float, 1.0, "coupling spread J"),
    "seed": Key(int, 0, "master seed"),
}

SOLVER = {
    "tol": Key(float, 1e-10, "fixed-point tolerance"),
    "max_iter": Key(int, 100_000, "iteration cap"),
    "damping": Key(float, 0.5, "damping eta"),
    "order": Key(int, 16, "Legendre nodes per quadrature panel"),
}

MC = {
    "sweeps": Key(int, 20000, "total sweeps per chain"),
    "burn_in": Key(int, 2000, "discarded sweeps"),
    "ladder": Key(_floats, None, "comma-separated ascending temperatures"),
    "t_min": Key(float, 0.5, "lowest ladder temperature"),
    "t_max": Key(float, 3.0, "highest ladder temperature"),
    "rungs": Key(int, 1, "geometric ladder size"),
    "exchange_interval": Key(int, 10, "sweeps between swap attempts"),
    "blocks": Key(int, 32, "blocks for error analysis"),
}

COMMAND_KEYS: dict[str, dict[str, Key]] = {
    "oracle": {**MODEL, "beta": Key(float, 1.0, "inverse temperature")},
    "rs": {
        "t": Key(float, 1.0, "temperature"),
        "jtilde0": Key(float, None, "effective mean coupling (default j0 + 2 lambda^2)"),
        "j0": Key(float, 0.0, "mean coupling scale J0"),
        "j": Key(float, 1.0, "coupling spread J"),
        "lambda": Key(float, 0.0, "qubit-cavity coupling"),
        **SOLVER,
    },
    "scan-matter": {
        "jt_min": Key(float, 0.0, ""), "jt_max": Key(float, 2.0, ""), "jt_steps": Key(int, 41, ""),
        "t_min": Key(float, 0.05, ""), "t_max": Key(float, 2.0, ""), "t_steps": Key(int, 40, ""),
        "j": Key(float, 1.0, "coupling spread J (sets units)"),
        "lambda": Key(float, 0.0, "coupling used for theta"),
        "class_tol": Key(float, 1e-6, "classification tolerance"),
        "warm_start": Key(_bool, True, "warm-start along T columns"),
        **SOLVER,
    },
    "scan-optical": {
        "lam_min": Key(float, 0.0, ""), "lam_max": Key(float, 2.0, ""), "lam_steps": Key(int, 41, ""),
        "t_min": Key(float, 0.05, ""), "t_max": Key(float, 2.0, ""), "t_steps": Key(int, 40, ""),
        "j0": Key(float, 0.0, ""), "j": Key(float, 1.0, ""),
        "class_tol": Key(float, 1e-6, "classification tolerance"),
        "warm_start": Key(_bool, True, "warm-start along T columns"),
        **SOLVER,
    },
    "mc": {**MODEL, **MC},
    "avg": {**MODEL, **MC, "realizations": Key(int, 8, "number of disorder realizations")},
    "validate": {"quick": Key(_bool, False, "reduced-size suite")},
}
