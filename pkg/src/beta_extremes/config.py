"""Experiment configuration: a flat ``key = value  # unit`` text format.

Values are written with ``repr`` so a configuration survives a write/read
round trip exactly.  Command-line flags are applied on top of file values.
"""

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError, DomainError
from .scaling import Regime, RegimeConfig

COMMANDS = ("verify-sum", "simulate-ppp", "eigen-scaling", "bounds-check")
FORMATS = ("csv", "json")

UNITS = {
    "command": "subcommand",
    "regime": "tag A|B|C",
    "gamma": "dimensionless, n beta / 2",
    "beta_exponent": "dimensionless, beta = n^-p",
    "loglog_power": "dimensionless, beta = 1/(n (log log n)^q)",
    "n_ladder": "matrix sizes (count)",
    "x_grid": "rescaled threshold units",
    "bins": "rescaled threshold units (bin edges)",
    "replicas": "count",
    "seed": "integer master seed",
    "samples": "count",
    "window_min": "rescaled threshold units",
    "out": "directory path",
    "format": "csv|json",
    "threads": "worker count (none = environment / CPU count)",
}

_DEFAULTS = {
    "verify-sum": dict(regime="A", beta_exponent=1.5, n_ladder=(10**4, 10**5, 10**6, 10**7)),
    "simulate-ppp": dict(regime="C", gamma=0.5, n_ladder=(10**6,), replicas=2000),
    "eigen-scaling": dict(regime="C", gamma=0.5, n_ladder=(10**2, 10**3, 10**4), replicas=1000),
    "bounds-check": dict(samples=10_000),
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    regime: str = "C"
    gamma: float | None = None
    beta_exponent: float | None = None
    loglog_power: float | None = None
    n_ladder: tuple = ()
    x_grid: tuple = (0.0, 0.5, 1.0, 2.0, 4.0)
    bins: tuple = (0.0, 1.0, 2.0, 4.0)
    replicas: int = 1000
    seed: int = 20240601
    samples: int = 10_000
    window_min: float = -2.0
    out: str = "results"
    format: str = "csv"
    threads: int | None = None

    @classmethod
    def defaults(cls, command):
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        return cls(command=command, **_DEFAULTS[command])

    def updated(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)

    def regime_config(self, n=None):
        """The :class:`RegimeConfig` at size ``n`` (default: largest ladder rung)."""
        n = max(self.n_ladder) if n is None else n
        regime = Regime(self.regime)
        q = self.loglog_power
        if regime is Regime.B and q is None:
            q = 0.5
        return RegimeConfig(
            regime,
            int(n),
            beta_exponent=self.beta_exponent if regime in (Regime.A, Regime.B) else None,
            gamma=self.gamma if regime is Regime.C else None,
            loglog_power=q if regime is Regime.B else None,
        )

    def validate(self):
        """Check every precondition before any computation starts."""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.seed < 0:
            raise ConfigError(f"seed must be nonnegative, got {self.seed}")
        if self.command == "bounds-check":
            if self.samples < 1:
                raise ConfigError(f"samples must be >= 1, got {self.samples}")
            return self
        try:
            Regime(self.regime)
        except ValueError:
            raise ConfigError(f"regime must be A, B or C, got {self.regime!r}") from None
        if self.regime == Regime.GAUSSIAN:
            raise ConfigError("the Gaussian tag is not an experiment regime")
        if not self.n_ladder:
            raise ConfigError("at least one n is required")
        if any(int(n) != n for n in self.n_ladder):
            raise ConfigError(f"n values must be integers, got {self.n_ladder}")
        cfg = self.regime_config()
        for n in self.n_ladder:
            try:
                cfg.scaling(int(n))
                beta = cfg.beta_for(int(n))
            except DomainError as exc:
                raise ConfigError(f"n={n}: {exc}") from exc
            if self.command in ("verify-sum", "simulate-ppp") and not n * beta < 2.0:
                raise ConfigError(f"n={n}: n beta = {n * beta:.4g} >= 2, the survival-sum bracket does not apply")
        if self.command == "verify-sum":
            if any(x < 0 for x in self.x_grid) or not self.x_grid:
                raise ConfigError(f"x_grid must be nonempty with x >= 0, got {self.x_grid}")
        if self.command == "simulate-ppp":
            if self.replicas < 100:
                raise ConfigError(f"the Poisson tests need >= 100 replicas, got {self.replicas}")
            b = self.bins
            if len(b) < 2 or any(y <= x for x, y in zip(b, b[1:])):
                raise ConfigError(f"bins must be strictly increasing edges, got {b}")
            if b[0] < 0 or b[0] < self.window_min:
                raise ConfigError(f"bins must lie in [0, inf) and inside the window, got {b}")
        if self.command == "eigen-scaling":
            if self.replicas < 1:
                raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        return self

    def to_text(self):
        lines = []
        for f in fields(self):
            lines.append(f"{f.name} = {_dump(getattr(self, f.name))}  # {UNITS[f.name]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        kinds = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in kinds:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _parse(key, val)
        if "command" not in values:
            raise ConfigError("config file must set command")
        base = cls.defaults(values["command"])
        return replace(base, **values)

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())


_INTS = {"replicas", "seed", "samples", "threads"}
_FLOATS = {"gamma", "beta_exponent", "loglog_power", "window_min"}
_INT_TUPLES = {"n_ladder"}
_FLOAT_TUPLES = {"x_grid", "bins"}


def _dump(v):
    if v is None:
        return "none"
    if isinstance(v, tuple):
        return ", ".join(_dump(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _number(text, kind):
    try:
        if kind is int:
            f = float(text)
            if not f.is_integer():
                raise ValueError
            return int(text) if text.lstrip("-").isdigit() else int(f)
        return float(text)
    except ValueError:
        raise ConfigError(f"cannot parse {text!r} as {kind.__name__}") from None


def _parse(key, val):
    if val.lower() == "none":
        return None
    if key in _INTS:
        return _number(val, int)
    if key in _FLOATS:
        return _number(val, float)
    if key in _INT_TUPLES:
        return tuple(_number(v.strip(), int) for v in val.split(",") if v.strip())
    if key in _FLOAT_TUPLES:
        out = tuple(_number(v.strip(), float) for v in val.split(",") if v.strip())
        if any(math.isnan(x) for x in out):
            raise ConfigError(f"{key}: NaN is not allowed")
        return out
    return val
