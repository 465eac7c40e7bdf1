"""Key-value config grammar: parsing, validation, digests.

Format: one ``key = value`` per line, ``#`` comments, dotted keys for nested
sections.  Lists are comma separated.  Validation collects *every* violation
(unknown keys included) and reports them with their key paths, rather than
stopping at the first problem.
"""

from __future__ import annotations

import hashlib

from ..experiments.base import ExperimentConfig
from ..randomfield import DistributionSpec, FieldError


class ConfigError(ValueError):
    """Config rejected; ``violations`` lists every offending key path."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid config:\n" + "\n".join(f"  - {v}" for v in self.violations))


EXPERIMENTS = ("bulk-limit", "locality", "cutoff", "cluster", "subadditive",
               "surface", "kirsch", "resolvent", "brownian")

# key -> value kind
_SCHEMA = {
    "experiment": "str",
    "seed": "int",
    "realizations": "int",
    "workers": "int",
    "dense_limit": "int",
    "grid.dimension": "int",
    "grid.spacing": "float",
    "distribution.kind": "str",
    "distribution.p": "float",
    "distribution.values": "float_list",
    "distribution.weights": "float_list",
    "distribution.low": "float",
    "distribution.high": "float",
    "distribution.value": "float",
    "profile.kind": "str",
    "profile.amplitude": "float",
    "profile.decay": "float",
    "schedule": "int_list",
    "energies": "float_list",
    "times": "float_list",
    "tolerances.bulk_deviation": "float",
    "tolerances.variance_slack": "float",
    "tolerances.slope_low": "float",
    "tolerances.slope_high": "float",
    "tolerances.relative_change": "float",
    "tolerances.transverse_tol": "float",
    "tolerances.additivity": "float",
    "tolerances.dual_rel": "float",
    "options.margin": "int",
    "options.ambient_factor": "int",
    "options.transverse": "int",
    "options.box_side": "int",
    "options.t": "float",
    "options.safety_factor": "float",
    "options.e_values": "float_list",
    "options.e_main": "float",
    "options.power": "int",
    "options.bump_lo": "float",
    "options.bump_hi": "float",
    "options.decay_comparison": "float_list",
    "options.additivity_sites": "int",
    "options.additivity_block": "int",
    "options.additivity_gap": "int",
    "options.check_ambient": "bool",
    "options.check_transverse": "bool",
    "options.paths": "int",
    "options.bridge": "bool",
    "options.distances": "float_list",
    "options.nus": "int_list",
    "options.joint_t": "float",
}

_REQUIRED = {
    "bulk-limit": ("grid.dimension", "distribution.kind", "profile.kind",
                   "schedule", "energies"),
    "locality": ("grid.dimension", "distribution.kind", "profile.kind", "schedule"),
    "cutoff": ("grid.dimension", "distribution.kind", "profile.kind", "schedule"),
    "cluster": ("grid.dimension", "distribution.kind", "profile.kind", "schedule"),
    "subadditive": ("grid.dimension", "distribution.kind", "profile.kind", "schedule"),
    "surface": ("grid.dimension", "distribution.kind", "profile.kind",
                "schedule", "energies"),
    "kirsch": ("grid.dimension", "profile.kind", "schedule", "energies", "times"),
    "resolvent": ("grid.dimension", "distribution.kind", "profile.kind", "schedule"),
    "brownian": (),
}

DEFAULT_TOLERANCES = {
    "bulk-limit": {"bulk_deviation": 0.02, "variance_slack": 1.2},
    "locality": {"slope_low": -1.3, "slope_high": -0.7},
    "cutoff": {},
    "cluster": {"slope_low": 0.7, "slope_high": 1.3, "additivity": 1.1},
    "subadditive": {},
    "surface": {"relative_change": 0.05, "transverse_tol": 0.05},
    "kirsch": {"dual_rel": 1e-8},
    "resolvent": {"slope_low": 0.7, "slope_high": 1.3},
    "brownian": {},
}


def _coerce(kind: str, raw: str):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "int_list":
        return tuple(int(v.strip()) for v in raw.split(",") if v.strip())
    if kind == "float_list":
        return tuple(float(v.strip()) for v in raw.split(",") if v.strip())
    return raw.strip()


def _parse_lines(text: str, violations: list) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            violations.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        key, _, value = body.partition("=")
        key = key.strip()
        value = value.strip()
        if key in raw:
            violations.append(f"{key}: duplicate key (line {lineno})")
            continue
        raw[key] = value
    return raw


def _build_distribution(vals: dict, violations: list):
    kind = vals.get("distribution.kind")
    if kind is None:
        return None
    try:
        if kind == "constant":
            return DistributionSpec("discrete",
                                    values=(vals.get("distribution.value", 1.0),),
                                    weights=(1.0,))
        if kind == "bernoulli":
            return DistributionSpec("bernoulli", p=vals.get("distribution.p"),
                                    values=vals.get("distribution.values"))
        if kind == "uniform":
            return DistributionSpec("uniform", low=vals.get("distribution.low"),
                                    high=vals.get("distribution.high"))
        if kind == "discrete":
            return DistributionSpec("discrete", values=vals.get("distribution.values"),
                                    weights=vals.get("distribution.weights"))
        violations.append(f"distribution.kind: unknown kind {kind!r}")
    except FieldError as exc:
        violations.append(f"distribution.*: {exc}")
    return None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate the config grammar; raises ConfigError listing every
    violated constraint, not just the first."""
    violations: list = []
    raw = _parse_lines(text, violations)

    vals = {}
    for key, rawval in raw.items():
        if key not in _SCHEMA:
            violations.append(f"{key}: unknown key")
            continue
        try:
            vals[key] = _coerce(_SCHEMA[key], rawval)
        except ValueError as exc:
            violations.append(f"{key}: {exc}")

    experiment = vals.get("experiment")
    if experiment is None:
        violations.append("experiment: missing")
    elif experiment not in EXPERIMENTS:
        violations.append(f"experiment: unknown experiment {experiment!r}")

    if experiment in _REQUIRED:
        for req in _REQUIRED[experiment]:
            if req not in vals:
                violations.append(f"{req}: required for {experiment}")

    if "grid.spacing" in vals and not vals["grid.spacing"] > 0.0:
        violations.append("grid.spacing: must be positive")
    if "grid.dimension" in vals and vals["grid.dimension"] not in (1, 2, 3):
        violations.append("grid.dimension: must be 1, 2 or 3")
    if "realizations" in vals and vals["realizations"] < 1:
        violations.append("realizations: must be >= 1")
    if "workers" in vals and vals["workers"] < 1:
        violations.append("workers: must be >= 1")
    sched = vals.get("schedule", ())
    if sched and any(b <= a for a, b in zip(sched, sched[1:])):
        violations.append("schedule: must be strictly increasing")

    distribution = _build_distribution(vals, violations)

    if violations:
        raise ConfigError(violations)

    tolerances = dict(DEFAULT_TOLERANCES.get(experiment, {}))
    options = {}
    profile = {}
    for key, value in vals.items():
        section, _, name = key.partition(".")
        if section == "tolerances":
            tolerances[name] = value
        elif section == "options":
            options[name] = value
        elif section == "profile":
            profile[name] = value

    return ExperimentConfig(
        experiment=experiment,
        seed=vals.get("seed", 0),
        realizations=vals.get("realizations", 1),
        workers=vals.get("workers", 1),
        dense_limit=vals.get("dense_limit", 4000),
        dimension=vals.get("grid.dimension", 1),
        spacing=vals.get("grid.spacing", 1.0),
        distribution=distribution,
        profile=profile,
        schedule=vals.get("schedule", ()),
        energies=vals.get("energies", ()),
        times=vals.get("times", (1.0,)),
        tolerances=tolerances,
        options=options,
    )


def config_digest(text: str) -> str:
    """Content hash of the literal config text."""
    return hashlib.sha256(text.encode()).hexdigest()
