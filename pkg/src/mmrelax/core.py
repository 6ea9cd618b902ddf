"""Shared domain types, state packing and validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration or input violates a documented invariant."""

    def __init__(self, message: str, field_name: Optional[str] = None):
        super().__init__(message)
        self.field_name = field_name


class EvaluationError(ArithmeticError):
    """A residual or monitor could not be evaluated (tangled mesh, overflow).

    The integrator treats this as a recoverable failure and retries with a
    smaller step.
    """

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class MeshState:
    """Node positions ``x_0 < x_1 < ... < x_N`` on ``[0, 1]``."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n_intervals(self) -> int:
        return self.nodes.size - 1

    @classmethod
    def uniform(cls, n_intervals: int) -> "MeshState":
        return cls(np.linspace(0.0, 1.0, n_intervals + 1))


@dataclass(frozen=True)
class MeshViolation:
    index: int
    kind: str  # "boundary" or "monotonicity"

    def __str__(self):
        return f"{self.kind} violation at i={self.index}"


def validate_mesh(x) -> Optional[MeshViolation]:
    """Return the first violation of pinning or strict monotonicity, else None."""
    x = np.asarray(getattr(x, "nodes", x), dtype=float)
    if x.size < 2:
        return MeshViolation(0, "boundary")
    if x[0] != 0.0:
        return MeshViolation(0, "boundary")
    bad = np.flatnonzero(~(np.diff(x) > 0.0))
    if bad.size:
        return MeshViolation(int(bad[0]), "monotonicity")
    if x[-1] != 1.0:
        return MeshViolation(x.size - 1, "boundary")
    return None


def pack_state(u, x) -> np.ndarray:
    """Concatenate node values and node positions as ``[u_0..u_N, x_0..x_N]``."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(getattr(x, "nodes", x), dtype=float)
    if u.shape != x.shape or u.ndim != 1:
        raise ConfigError(
            f"u has shape {u.shape} but mesh has shape {x.shape}", "nodes")
    return np.concatenate([u, x])


def unpack_state(y) -> tuple[np.ndarray, np.ndarray]:
    """Split a packed vector (or a batch of them, last axis) into ``(u, x)``."""
    y = np.asarray(y)
    n = y.shape[-1]
    if n % 2:
        raise ConfigError(f"packed vector has odd length {n}")
    return y[..., : n // 2], y[..., n // 2:]


@dataclass(frozen=True)
class SystemState:
    time: float
    y: np.ndarray
    ydot: np.ndarray

    def __post_init__(self):
        if np.shape(self.y) != np.shape(self.ydot):
            raise ConfigError("y and ydot must have the same length")
        if np.size(self.y) % 2:
            raise ConfigError("packed state must have length 2(N+1)")

    @property
    def n_intervals(self) -> int:
        return np.size(self.y) // 2 - 1

    def unpack(self):
        return unpack_state(self.y)

    def unpack_rates(self):
        return unpack_state(self.ydot)


# --- problem definition ---------------------------------------------------

NONLINEARITIES = ("power", "exponential", "prescribed")
MONITOR_KINDS = ("arclength", "power", "exponential")


@dataclass(frozen=True)
class ProblemSpec:
    """Physical problem: nonlinearity, initial data and monitor choice.

    ``nonlinearity`` is ``"power"`` (with exponent ``p``), ``"exponential"``
    or ``"prescribed"`` (with ``example`` naming a catalog entry). For the
    power monitor the exponent used is ``p - 1``.
    """

    nonlinearity: str
    monitor_kind: str
    p: Optional[float] = None
    example: Optional[str] = None
    initial_data: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False)

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigError(f"unknown nonlinearity {self.nonlinearity!r}",
                              "nonlinearity")
        if self.monitor_kind not in MONITOR_KINDS:
            raise ConfigError(f"unknown monitor kind {self.monitor_kind!r}",
                              "monitor")
        if self.nonlinearity == "power" or self.monitor_kind == "power":
            if self.p is None or not self.p > 1:
                raise ConfigError("power nonlinearity requires p > 1", "p")
        if self.nonlinearity == "prescribed" and self.example is None:
            raise ConfigError("prescribed problems need an example id",
                              "example")

    @property
    def beta(self) -> float:
        return 1.0 / (self.p - 1.0)

    @property
    def prescribed(self) -> bool:
        return self.nonlinearity == "prescribed"


# --- run configuration ----------------------------------------------------

@dataclass(frozen=True)
class TauPolicy:
    """Mesh relaxation time: a constant, or ``tau_o * max(M)`` clamped."""

    kind: str
    tau: Optional[float] = None
    tau_o: float = 1e-8
    tau_min: float = 1e-8
    tau_max: float = 1e-1

    def __post_init__(self):
        if self.kind == "fixed":
            if self.tau is None or not self.tau > 0:
                raise ConfigError("fixed tau must be > 0", "tau")
        elif self.kind == "adaptive":
            if not (self.tau_o > 0 and self.tau_min > 0):
                raise ConfigError("adaptive tau needs tau_o, tau_min > 0",
                                  "tau")
            if not self.tau_max >= self.tau_min:
                raise ConfigError("adaptive tau needs tau_max >= tau_min",
                                  "tau")
        else:
            raise ConfigError(f"unknown tau policy {self.kind!r}", "tau")

    @classmethod
    def fixed(cls, tau: float) -> "TauPolicy":
        return cls("fixed", tau=float(tau))

    @classmethod
    def adaptive(cls, tau_o=1e-8, tau_min=1e-8, tau_max=1e-1) -> "TauPolicy":
        return cls("adaptive", tau_o=float(tau_o), tau_min=float(tau_min),
                   tau_max=float(tau_max))

    @classmethod
    def parse(cls, text: str) -> "TauPolicy":
        """Parse ``fixed:<tau>`` or ``adaptive[:<tau_o>[,<min>,<max>]]``."""
        kind, _, rest = text.strip().partition(":")
        try:
            if kind == "fixed":
                return cls.fixed(float(rest))
            if kind == "adaptive":
                if not rest:
                    return cls.adaptive()
                vals = [float(v) for v in rest.split(",")]
                if len(vals) == 1:
                    return cls.adaptive(vals[0])
                if len(vals) == 3:
                    return cls.adaptive(*vals)
        except ValueError as exc:
            raise ConfigError(f"bad tau value {text!r}: {exc}", "tau") from None
        raise ConfigError(f"bad tau policy {text!r}", "tau")

    def __str__(self):
        if self.kind == "fixed":
            return f"fixed:{self.tau!r}"
        return f"adaptive:{self.tau_o!r},{self.tau_min!r},{self.tau_max!r}"


MMPDE_VARIANTS = ("MMPDE4", "MMPDE6")
MONITOR_FLOOR = 1e-10


@dataclass(frozen=True)
class RunConfig:
    N: int = 200
    mmpde: str = "MMPDE6"
    tau: TauPolicy = field(default_factory=TauPolicy.adaptive)
    gamma: float = 2.0
    ip: int = 0
    rtol: float = 1e-8
    atol: float = 1e-8
    decades: tuple = ()
    t_end: float = 1.0
    min_step: float = 1e-16
    max_error_failures: int = 7
    max_order: int = 5
    max_newton: int = 4
    monitor_floor: float = MONITOR_FLOOR

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 10:
            raise ConfigError(f"N must be an integer >= 10, got {self.N}", "N")
        if self.mmpde not in MMPDE_VARIANTS:
            raise ConfigError(f"mmpde must be one of {MMPDE_VARIANTS}",
                              "mmpde")
        if not self.gamma > 0:
            raise ConfigError("gamma must be > 0", "gamma")
        if int(self.ip) != self.ip or self.ip < 0:
            raise ConfigError("ip must be a non-negative integer", "ip")
        if not 2 * self.ip < self.N:
            raise ConfigError(
                f"smoothing window ip={self.ip} must satisfy ip < N/2 "
                f"(N={self.N})", "ip")
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("rtol and atol must be > 0", "rtol")
        if not 1 <= self.max_order <= 5:
            raise ConfigError("max_order must lie in [1, 5]", "max_order")
        if not self.min_step > 0:
            raise ConfigError("min_step must be > 0", "min_step")
        if self.max_error_failures < 1 or self.max_newton < 1:
            raise ConfigError("failure limits must be >= 1",
                              "max_error_failures")
        if not self.monitor_floor > 0:
            raise ConfigError("monitor_floor must be > 0", "monitor_floor")
        object.__setattr__(self, "decades",
                           tuple(int(d) for d in self.decades))

    # Flat key=value representation shared by config files, CLI flags and
    # the summary echo. Floats use repr() so that re-parsing is bit-exact.
    def to_items(self) -> dict:
        return {
            "N": str(self.N),
            "mmpde": self.mmpde,
            "tau": str(self.tau),
            "gamma": repr(float(self.gamma)),
            "ip": str(self.ip),
            "rtol": repr(float(self.rtol)),
            "atol": repr(float(self.atol)),
            "decades": ",".join(str(d) for d in self.decades),
            "t_end": repr(float(self.t_end)),
            "min_step": repr(float(self.min_step)),
            "max_error_failures": str(self.max_error_failures),
            "max_order": str(self.max_order),
            "max_newton": str(self.max_newton),
            "monitor_floor": repr(float(self.monitor_floor)),
        }

    @classmethod
    def from_items(cls, items: dict, base: Optional["RunConfig"] = None):
        """Build a config from string items, starting from ``base``."""
        kwargs = {}
        for key, raw in items.items():
            key = key.strip().replace("-", "_")
            raw = str(raw).strip()
            try:
                if key == "tau":
                    kwargs[key] = TauPolicy.parse(raw)
                elif key in ("N", "ip", "max_error_failures", "max_order",
                             "max_newton"):
                    kwargs[key] = int(raw)
                elif key == "mmpde":
                    kwargs[key] = raw.upper()
                elif key == "decades":
                    kwargs[key] = tuple(int(v) for v in raw.split(",") if v)
                elif key in ("gamma", "rtol", "atol", "t_end", "min_step",
                             "monitor_floor"):
                    kwargs[key] = float(raw)
                else:
                    raise ConfigError(f"unknown config key {key!r}", key)
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value for {key}: {raw!r}", key) \
                    from None
        if base is None:
            return cls(**kwargs)
        return base.replace(**kwargs)

    def replace(self, **changes) -> "RunConfig":
        from dataclasses import replace
        return replace(self, **changes)


def parse_config_text(text: str) -> dict:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value")
        items[key.strip()] = value.strip()
    return items
