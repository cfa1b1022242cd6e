"""Run configuration shared by the command-line tools.

Config files are plain ``key = value`` lines; ``#`` starts a comment.
Lists are comma separated and ``auto`` stands for "derive from the data".
:func:`emit` writes every field in a fixed order, so
``emit(parse(text))`` is the normalized form of ``text``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Optional

from .experiments import METHODS

FORECAST_METHODS = ("splash0", "splash_a", "splash1", "gmwy", "const")
BANDWIDTH_MODES = ("bootstrap", "none")


class ConfigError(ValueError):
    def __init__(self, name: str, message: str):
        super().__init__(f"{name}: {message}")
        self.field = name


@dataclass
class RunConfig:
    """All tunable settings; unused fields are ignored by a command.

    ``methods=None`` selects the command default: every simulation method
    for ``replicate`` and SPLASH(0), SPLASH(alpha), SPLASH(1), GMWY and
    CONST for ``forecast-eval`` (PVAR is always the benchmark there).
    """

    design: str = "B"
    n: int = 25
    m: int = 5
    k0: int = 3
    t: int = 1000
    reps: int = 50
    seed: int = 0
    burn_in: int = 500
    bandwidth: str = "bootstrap"
    n_boot: int = 50
    cap: Optional[int] = None
    alpha: Optional[float] = None
    alphas: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    lambdas: Optional[list] = None
    n_lambda: int = 20
    lambda_ratio: float = 1e-4
    train_frac: float = 0.8
    select: str = "cv"
    methods: Optional[list] = None
    window_frac: float = 0.8
    loss: str = "absolute"
    interpolate: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.design not in ("A", "B"):
            raise ConfigError("design", "must be A or B")
        if self.n < 4:
            raise ConfigError("n", "must be at least 4")
        if self.m < 2:
            raise ConfigError("m", "must be at least 2")
        if not 0 <= self.k0:
            raise ConfigError("k0", "must be non-negative")
        if self.t < 2:
            raise ConfigError("t", "must be at least 2")
        if self.reps < 1:
            raise ConfigError("reps", "must be positive")
        if self.seed < 0:
            raise ConfigError("seed", "must be non-negative")
        if self.burn_in < 0:
            raise ConfigError("burn_in", "must be non-negative")
        if self.bandwidth not in BANDWIDTH_MODES:
            try:
                if int(self.bandwidth) < 0:
                    raise ValueError
            except ValueError:
                raise ConfigError("bandwidth", "must be bootstrap, none or a non-negative integer") from None
        if self.n_boot < 2:
            raise ConfigError("n_boot", "must be at least 2")
        if self.cap is not None and self.cap < 0:
            raise ConfigError("cap", "must be non-negative")
        if self.alpha is not None and not 0 <= self.alpha <= 1:
            raise ConfigError("alpha", "must lie in [0, 1]")
        if not self.alphas or any(not 0 <= a <= 1 for a in self.alphas):
            raise ConfigError("alphas", "must be values in [0, 1]")
        if self.lambdas is not None:
            if not self.lambdas or any(x < 0 for x in self.lambdas):
                raise ConfigError("lambdas", "must be non-negative")
            if any(b > a for a, b in zip(self.lambdas, self.lambdas[1:])):
                raise ConfigError("lambdas", "must be descending")
        if self.n_lambda < 1:
            raise ConfigError("n_lambda", "must be positive")
        if not 0 < self.lambda_ratio <= 1:
            raise ConfigError("lambda_ratio", "must lie in (0, 1]")
        if not 0 < self.train_frac < 1:
            raise ConfigError("train_frac", "must lie in (0, 1)")
        if self.select not in ("cv", "path"):
            raise ConfigError("select", "must be cv or path")
        if self.methods is not None:
            known = set(METHODS) | set(FORECAST_METHODS) | {"pvar"}
            bad = [x for x in self.methods if x not in known]
            if bad or not self.methods:
                raise ConfigError("methods", f"unknown method(s) {bad}; known: {sorted(known)}")
        if not 0 < self.window_frac < 1:
            raise ConfigError("window_frac", "must lie in (0, 1)")
        if self.loss not in ("absolute", "squared"):
            raise ConfigError("loss", "must be absolute or squared")

    @property
    def bandwidth_value(self):
        """``"bootstrap"``, ``None`` (no banding) or an integer."""
        if self.bandwidth == "bootstrap":
            return "bootstrap"
        if self.bandwidth == "none":
            return None
        return int(self.bandwidth)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _kind(f) -> str:
    t = str(f.type)
    if "list" in t:
        return "list_str" if f.name == "methods" else "list_float"
    for k in ("bool", "int", "float", "str"):
        if k in t:
            return k
    raise TypeError(t)  # pragma: no cover


def _parse_value(f, text: str):
    s = text.strip()
    optional = "Optional" in str(f.type)
    if optional and s.lower() == "auto":
        return None
    kind = _kind(f)
    try:
        if kind == "bool":
            low = s.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError
        if kind == "int":
            return int(s)
        if kind == "float":
            return float(s)
        if kind == "str":
            if not s:
                raise ValueError
            return s
        items = [x.strip() for x in s.split(",") if x.strip()]
        return items if kind == "list_str" else [float(x) for x in items]
    except ValueError:
        raise ConfigError(f.name, f"invalid value {text!r}") from None


def _format_value(f, value) -> str:
    if value is None:
        return "auto"
    kind = _kind(f)
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    if kind == "list_float":
        return ", ".join(repr(float(x)) for x in value)
    if kind == "list_str":
        return ", ".join(value)
    return str(value)


FIELDS = {f.name: f for f in fields(RunConfig)}


def coerce(updates: dict) -> dict:
    """Parse string values of ``updates`` into typed field values."""
    out = {}
    for key, val in updates.items():
        name = key.replace("-", "_")
        if name not in FIELDS:
            raise ConfigError(name, "unknown setting")
        out[name] = _parse_value(FIELDS[name], val) if isinstance(val, str) else val
    return out


def parse(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, val = line.split("=", 1)
        values[key.strip()] = val
    return merge(base or RunConfig(), coerce(values))


def merge(cfg: RunConfig, updates: dict) -> RunConfig:
    try:
        return dataclasses.replace(cfg, **updates)
    except ConfigError:
        raise
    except TypeError as exc:  # pragma: no cover
        raise ConfigError("config", str(exc)) from None


def emit(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_format_value(f, getattr(cfg, f.name))}\n" for f in fields(RunConfig))


def load(path, base: Optional[RunConfig] = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), base)
