"""Run configuration: a flat key=value text format.

One ``key=value`` per line; ``#`` starts a comment; blank lines are
ignored.  Keys are flat with dotted prefixes for algorithm and objective
parameters (e.g. ``algorithm.kappa_sigma=0.5``).  Unknown and duplicate
keys are rejected, and every reported error names the key and line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .algorithms import ALGORITHM_NAMES, default_population

MODES = (
    "trajectory",
    "normalized-chain",
    "cr-estimate",
    "invariance-suite",
    "si-check",
    "constant-sigma",
)

DEFAULT_X0_FILL = 0.8
DEFAULT_SIGMA0 = 1.0
DEFAULT_MAX_EVALS = 10 ** 6


class ConfigError(ValueError):
    def __init__(self, message: str, key: str = None, line: int = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)


@dataclass(frozen=True)
class RunConfig:
    objective: str
    n: int
    seed: int
    algorithm: Optional[str] = None
    mode: str = "trajectory"
    x0: tuple = ()  # empty means scalar fill with x0_fill
    x0_fill: float = DEFAULT_X0_FILL
    sigma0: float = DEFAULT_SIGMA0
    replicates: int = 1
    max_evals: int = DEFAULT_MAX_EVALS
    target_f: Optional[float] = None
    require_target: bool = False
    x_star: tuple = ()
    algorithm_params: dict = field(default_factory=dict)
    trace_stride: Optional[int] = None
    horizon: int = 1000
    si_trials: int = 1000
    burn_in: Optional[int] = None
    figures: bool = True

    def initial_x(self):
        import numpy as np

        if self.x0:
            return np.asarray(self.x0, dtype=float)
        return np.full(self.n, self.x0_fill)

    def reference_point(self):
        import numpy as np

        if self.x_star:
            return np.asarray(self.x_star, dtype=float)
        return np.zeros(self.n)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _parse_vector(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


_ALGO_PARAM_KEYS = {
    "algorithm.p": ("p", _parse_int),
    "algorithm.kappa_m": ("kappa_m", float),
    "algorithm.kappa_sigma": ("kappa_sigma", float),
    "algorithm.tau": ("tau", float),
    "algorithm.p_target": ("p_target", float),
}

_SCALAR_KEYS = {
    "algorithm": ("algorithm", str),
    "objective": ("objective", str),
    "n": ("n", _parse_int),
    "seed": ("seed", _parse_int),
    "mode": ("mode", str),
    "sigma0": ("sigma0", float),
    "replicates": ("replicates", _parse_int),
    "max_evals": ("max_evals", _parse_int),
    "target_f": ("target_f", float),
    "require_target": ("require_target", _parse_bool),
    "trace_stride": ("trace_stride", _parse_int),
    "horizon": ("horizon", _parse_int),
    "si_trials": ("si_trials", _parse_int),
    "burn_in": ("burn_in", _parse_int),
    "figures": ("figures", _parse_bool),
}


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and fully validate a configuration.

    ``overrides`` are extra ``key=value`` strings (from ``--set``)
    applied after the file; unlike file keys they may repeat keys.
    """
    assignments = {}
    lines = {}

    def assign(key, value, line, allow_repeat):
        if key not in _SCALAR_KEYS and key not in _ALGO_PARAM_KEYS and key not in (
            "x0", "objective.x_star",
        ):
            raise ConfigError("unknown key", key=key, line=line)
        if not allow_repeat and key in assignments:
            raise ConfigError("duplicate key", key=key, line=line)
        assignments[key] = value
        lines[key] = line

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected key=value, got {stripped!r}", line=lineno)
        key, value = stripped.split("=", 1)
        assign(key.strip(), value.strip(), lineno, allow_repeat=False)

    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        assign(key.strip(), value.strip(), None, allow_repeat=True)

    return _build(assignments, lines)


def _build(assignments: dict, lines: dict) -> RunConfig:
    values = {}
    algo_params = {}

    def fail(message, key):
        raise ConfigError(message, key=key, line=lines.get(key))

    for key, raw in assignments.items():
        try:
            if key in _SCALAR_KEYS:
                name, parser = _SCALAR_KEYS[key]
                values[name] = parser(raw)
            elif key in _ALGO_PARAM_KEYS:
                name, parser = _ALGO_PARAM_KEYS[key]
                algo_params[name] = parser(raw)
            elif key == "x0":
                vec = _parse_vector(raw)
                if len(vec) == 1:
                    values["x0_fill"] = vec[0]
                    values["x0"] = ()
                else:
                    values["x0"] = vec
            elif key == "objective.x_star":
                values["x_star"] = _parse_vector(raw)
        except ConfigError:
            raise
        except ValueError as exc:
            fail(f"invalid value: {exc}", key)

    mode = values.get("mode", "trajectory")
    if mode not in MODES:
        fail(f"unknown mode {mode!r}; known: {', '.join(MODES)}", "mode")

    for required in ("objective", "n", "seed"):
        if required not in values:
            raise ConfigError("missing required key", key=required)
    if "algorithm" not in values:
        if mode == "constant-sigma":
            values["algorithm"] = "constant"
        elif mode != "si-check":
            raise ConfigError("missing required key", key="algorithm")

    config = _resolve(RunConfig(algorithm_params=algo_params, **values))
    _validate(config, lines)
    return config


def _validate(config: RunConfig, lines: dict):
    def fail(message, key):
        raise ConfigError(message, key=key, line=lines.get(key))

    if config.algorithm is not None and config.algorithm not in ALGORITHM_NAMES:
        fail(
            f"unknown algorithm {config.algorithm!r}; known: "
            f"{', '.join(ALGORITHM_NAMES)}",
            "algorithm",
        )
    if config.mode == "constant-sigma" and config.algorithm != "constant":
        fail("mode constant-sigma requires algorithm=constant", "algorithm")
    if config.n < 1:
        fail("n must be >= 1", "n")
    if not config.sigma0 > 0:
        fail("sigma0 must be positive", "sigma0")
    if config.replicates < 1:
        fail("replicates must be >= 1", "replicates")
    if config.max_evals < 1:
        fail("max_evals must be >= 1", "max_evals")
    if config.x0 and len(config.x0) != config.n:
        fail(f"x0 needs 1 or {config.n} values", "x0")
    if config.x_star and len(config.x_star) != config.n:
        fail(f"objective.x_star needs 1 or {config.n} values", "objective.x_star")
    if config.target_f is not None and not math.isfinite(config.target_f):
        fail("target_f must be finite", "target_f")
    if config.trace_stride is not None and config.trace_stride < 1:
        fail("trace_stride must be >= 1", "trace_stride")
    if config.horizon < 1:
        fail("horizon must be >= 1", "horizon")
    if config.si_trials < 1:
        fail("si_trials must be >= 1", "si_trials")
    if config.burn_in is not None and config.burn_in < 0:
        fail("burn_in must be >= 0", "burn_in")

    unknown = set(config.algorithm_params) - {
        "p", "kappa_m", "kappa_sigma", "tau", "p_target"
    }
    if unknown:
        fail(f"unsupported algorithm parameters {sorted(unknown)}", "algorithm")

    from .objectives import parse_objective

    try:
        parse_objective(config.objective, config.n,
                        x_star=config.reference_point() if config.x_star else None)
    except ValueError as exc:
        fail(str(exc), "objective")


def _resolve(config: RunConfig) -> RunConfig:
    """Fill in derived defaults so the echoed config is complete."""
    params = dict(config.algorithm_params)
    if config.algorithm in ("csa", "xnes", "sa") and "p" not in params:
        params["p"] = default_population(config.n)
    if config.algorithm == "sa" and "tau" not in params:
        params["tau"] = 1.0 / math.sqrt(config.n)
    if config.algorithm in ("csa", "xnes"):
        params.setdefault("kappa_m", 1.0)
        params.setdefault("kappa_sigma", 1.0)
    if config.algorithm == "oneplusone":
        params.setdefault("p_target", 0.2)
        params.setdefault("kappa_sigma", 1.0 / 3.0)
    if len(config.x_star) == 1:
        config = replace(config, x_star=tuple([config.x_star[0]] * config.n))
    return replace(config, algorithm_params=params)


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, tuple):
        return ",".join(f"{v:.17g}" for v in value)
    return str(value)


def resolved_items(config: RunConfig) -> list:
    """The full effective configuration as sorted (key, value) strings,
    used for the reproducibility comment in every output file."""
    items = {
        "mode": config.mode,
        "objective": config.objective,
        "n": config.n,
        "seed": config.seed,
        "x0": config.x0 if config.x0 else config.x0_fill,
        "sigma0": config.sigma0,
        "replicates": config.replicates,
        "max_evals": config.max_evals,
        "figures": config.figures,
    }
    if config.algorithm is not None:
        items["algorithm"] = config.algorithm
        for name, value in sorted(config.algorithm_params.items()):
            items[f"algorithm.{name}"] = value
    if config.x_star:
        items["objective.x_star"] = config.x_star
    if config.target_f is not None:
        items["target_f"] = config.target_f
        items["require_target"] = config.require_target
    if config.trace_stride is not None:
        items["trace_stride"] = config.trace_stride
    if config.burn_in is not None:
        items["burn_in"] = config.burn_in
    if config.mode == "invariance-suite":
        items["horizon"] = config.horizon
    if config.mode == "si-check":
        items["si_trials"] = config.si_trials
    return [(k, _fmt_value(v)) for k, v in sorted(items.items())]
