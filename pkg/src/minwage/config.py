"""TOML configuration: bundled defaults, user files and ``key=value`` overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from importlib import resources
from pathlib import Path

import tomli

from . import model as M
from .equilibrium import SolverOptions
from .errors import ConfigError

DATA = resources.files("minwage") / "data"


def bundled(name: str) -> Path:
    """Path of a bundled data file."""
    return Path(str(DATA / name))


def _read(path) -> dict:
    """Read TOML, or the configuration embedded in an emitted JSON/CSV output."""
    suffix = Path(path).suffix.lower()
    try:
        if suffix == ".json":
            with open(path) as fh:
                data = json.load(fh)
            return data["metadata"]["config"] if "metadata" in data else data
        if suffix == ".csv":
            with open(path) as fh:
                for line in fh:
                    if line.startswith("# config: "):
                        return json.loads(line[len("# config: "):])
            raise ConfigError(f"{path} carries no config header")
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except (tomli.TOMLDecodeError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")


def _merge(base: dict, upd: dict, prefix="") -> dict:
    out = copy.deepcopy(base)
    for key, val in upd.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val, name + ".")
        else:
            if key in out and not isinstance(out[key], dict):
                _check_type(name, out[key], val)
            out[key] = val
    return out


def _check_type(name, old, new):
    if isinstance(old, bool):
        ok = isinstance(new, bool)
    elif isinstance(old, (int, float)):
        ok = isinstance(new, (int, float)) and not isinstance(new, bool)
        # numeric keys that accept "none" as their sentinel
        ok = ok or new == "none"
    elif isinstance(old, str):
        ok = isinstance(new, str) or (old == "none" and isinstance(new, (int, float)))
    elif isinstance(old, list):
        ok = isinstance(new, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{name}: expected {type(old).__name__}, got {new!r}")


def parse_override(text: str) -> tuple[list[str], object]:
    """Split ``section.key=value`` and parse ``value`` as a TOML literal.

    Bare words that are not valid TOML are taken as strings.
    """
    if "=" not in text:
        raise ConfigError(f"override must look like key=value: {text!r}")
    key, raw = text.split("=", 1)
    path = [p for p in key.strip().split(".") if p]
    if not path:
        raise ConfigError(f"empty override key in {text!r}")
    try:
        val = tomli.loads(f"v = {raw.strip()}")["v"]
    except tomli.TOMLDecodeError:
        val = raw.strip()
    return path, val


def apply_override(cfg: dict, path: list[str], val) -> dict:
    node = cfg
    for part in path[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(f"unknown config section {'.'.join(path[:-1])}")
        node = node[part]
    leaf = path[-1]
    if leaf not in node:
        raise ConfigError(f"unknown config key {'.'.join(path)}")
    _check_type(".".join(path), node[leaf], val)
    node[leaf] = val
    return cfg


def load_config(path=None, overrides=()) -> dict:
    """Bundled baseline, then ``path`` merged on top, then overrides.

    Relative file references inside a user config resolve against its
    directory and are stored as absolute paths under ``_base_dir``.
    """
    cfg = _read(bundled("baseline.toml"))
    cfg["_base_dir"] = str(bundled(""))
    if path is not None:
        user = _read(path)
        cfg = _merge(cfg, user)
        cfg["_base_dir"] = str(Path(path).resolve().parent)
    for text in overrides:
        apply_override(cfg, *parse_override(text))
    return cfg


def resolve(cfg: dict, ref: str) -> Path:
    """Resolve a file reference from a config, falling back to bundled data."""
    p = Path(ref)
    if p.is_absolute():
        return p
    local = Path(cfg.get("_base_dir", ".")) / p
    return local if local.exists() else bundled(ref)


def config_hash(cfg: dict) -> str:
    """Stable short hash of a configuration (private keys excluded)."""
    clean = {k: v for k, v in cfg.items() if not k.startswith("_")}
    blob = json.dumps(clean, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def model_params(cfg: dict) -> M.ModelParams:
    return M.params_from_flat(cfg["model"])


def _mw(val):
    if val is None or val == "none":
        return None
    return float(val)


def policy(cfg: dict) -> M.Policy:
    p = cfg["policy"]
    try:
        return M.Policy(tau_l=float(p["tau_l"]), tau_h=float(p["tau_h"]), t=float(p["t"]),
                        mw_hourly=_mw(p.get("mw_hourly")))
    except KeyError as exc:
        raise ConfigError(f"missing policy key {exc}")


def solver_options(cfg: dict) -> SolverOptions:
    s = cfg.get("solver", {})
    known = set(SolverOptions.__dataclass_fields__)
    extra = set(s) - known
    if extra:
        raise ConfigError(f"unknown solver keys: {', '.join(sorted(extra))}")
    kw = dict(s)
    if "log_n_bracket" in kw:
        kw["log_n_bracket"] = tuple(kw["log_n_bracket"])
    if "quad_nodes" in kw:
        kw["quad_nodes"] = int(kw["quad_nodes"])
    return SolverOptions(**kw)
