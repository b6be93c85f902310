"""JSON run configurations for the command-line front end.

Complex numbers are written as ``[re, im]`` pairs (a bare number is read as
real). ``beta`` accepts a positive number, ``"inf"`` or ``null`` for zero
temperature. Every config round-trips through ``to_dict``/``from_dict``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class ConfigError(ValueError):
    def __init__(self, path: tuple, message: str, line: int | None = None):
        self.path = tuple(path)
        self.message = message
        self.line = line
        where = ".".join(str(p) for p in self.path) or "<root>"
        super().__init__(f"{where}: {message}")

    def located(self, source: str, line: int | None) -> str:
        ln = line if line is not None else self.line
        prefix = f"{source}:{ln}" if ln is not None else source
        return f"{prefix}: {self}"


def encode_complex(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m) -> list:
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def _complex(value, path) -> complex:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number or [re, im] pair")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(path, "expected a number or [re, im] pair")


def _real(d: dict, key: str, path, default=None, positive=False, nonneg=False) -> float:
    if key not in d:
        if default is None:
            raise ConfigError(path + (key,), "missing required field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(path + (key,), "expected a finite number")
    if positive and not v > 0:
        raise ConfigError(path + (key,), "must be positive")
    if nonneg and v < 0:
        raise ConfigError(path + (key,), "must be nonnegative")
    return float(v)


def _int(d: dict, key: str, path, default=None, minimum=None) -> int:
    if key not in d:
        if default is None:
            raise ConfigError(path + (key,), "missing required field")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path + (key,), "expected an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(path + (key,), f"must be >= {minimum}")
    return v


def _beta(d: dict, path, default=math.inf) -> float:
    if "beta" not in d:
        return default
    v = d["beta"]
    if v is None or v == "inf":
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
        raise ConfigError(path + ("beta",), "must be a positive number, \"inf\" or null")
    return float(v)


def _encode_beta(beta: float):
    return "inf" if math.isinf(beta) else beta


def _dict(value, path) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, "expected an object")
    return value


def _reject_unknown(d: dict, allowed, path):
    for k in d:
        if k not in allowed:
            raise ConfigError(path + (k,), "unknown field")


def _amplitudes(d: dict, path) -> tuple[complex, complex]:
    a = _complex(d["a"], path + ("a",)) if "a" in d else None
    b = _complex(d["b"], path + ("b",)) if "b" in d else None
    if a is None:
        raise ConfigError(path + ("a",), "missing required field")
    if b is None:
        raise ConfigError(path + ("b",), "missing required field")
    n = abs(a) ** 2 + abs(b) ** 2
    if abs(n - 1) > 1e-9:
        raise ConfigError(path + ("b",), f"|a|^2 + |b|^2 = {n:.12g}, expected 1")
    # Renormalize away the admissible rounding in hand-written configs.
    s = math.sqrt(n)
    return a / s, b / s


@dataclass(frozen=True)
class TimeGrid:
    start: float = 0.0
    stop: float = 10.0
    num: int = 101
    values: tuple[float, ...] | None = None

    @classmethod
    def from_value(cls, v, path) -> TimeGrid:
        if isinstance(v, list):
            vals = []
            for i, x in enumerate(v):
                if isinstance(x, bool) or not isinstance(x, (int, float)) or x < 0:
                    raise ConfigError(path + (i,), "times must be nonnegative numbers")
                vals.append(float(x))
            if not vals:
                raise ConfigError(path, "times must be nonempty")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ConfigError(path, "times must be ascending")
            return cls(values=tuple(vals))
        d = _dict(v, path)
        _reject_unknown(d, ("start", "stop", "num"), path)
        start = _real(d, "start", path, 0.0, nonneg=True)
        stop = _real(d, "stop", path, nonneg=True)
        num = _int(d, "num", path, minimum=1)
        if stop < start:
            raise ConfigError(path + ("stop",), "stop must be >= start")
        return cls(start, stop, num)

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.array(self.values)
        return np.linspace(self.start, self.stop, self.num)

    def to_value(self):
        if self.values is not None:
            return list(self.values)
        return {"start": self.start, "stop": self.stop, "num": self.num}


@dataclass(frozen=True)
class BathConfig:
    kind: str = "ohmic"
    eta: float = 1.0
    omega_c: float = 1.0
    beta: float = 1.0
    modes: tuple[tuple[float, complex], ...] = ()

    @classmethod
    def from_value(cls, v, path) -> BathConfig:
        d = _dict(v, path)
        kind = d.get("kind", "ohmic")
        if kind == "ohmic":
            _reject_unknown(d, ("kind", "eta", "omega_c", "beta"), path)
            return cls("ohmic", _real(d, "eta", path, 1.0, positive=True),
                       _real(d, "omega_c", path, 1.0, positive=True), _beta(d, path, 1.0))
        if kind == "discrete":
            _reject_unknown(d, ("kind", "modes", "beta"), path)
            return cls("discrete", beta=_beta(d, path, 1.0), modes=_modes(d, path))
        raise ConfigError(path + ("kind",), "must be \"ohmic\" or \"discrete\"")

    def to_value(self) -> dict:
        if self.kind == "ohmic":
            return {"kind": "ohmic", "eta": self.eta, "omega_c": self.omega_c, "beta": _encode_beta(self.beta)}
        return {"kind": "discrete", "modes": [[w, encode_complex(g)] for w, g in self.modes],
                "beta": _encode_beta(self.beta)}

    def spec(self):
        from .bath import BathSpec

        if self.kind == "ohmic":
            return BathSpec.ohmic(self.eta, self.omega_c, self.beta)
        return BathSpec.discrete(self.modes, self.beta)


def _modes(d: dict, path) -> tuple[tuple[float, complex], ...]:
    if "modes" not in d:
        raise ConfigError(path + ("modes",), "missing required field")
    raw = d["modes"]
    if not isinstance(raw, list):
        raise ConfigError(path + ("modes",), "expected a list of [omega, g] pairs")
    out = []
    for i, m in enumerate(raw):
        p = path + ("modes", i)
        if not isinstance(m, list) or len(m) != 2:
            raise ConfigError(p, "expected [omega, g]")
        w = m[0]
        if isinstance(w, bool) or not isinstance(w, (int, float)) or not w > 0:
            raise ConfigError(p, "mode frequency must be positive")
        out.append((float(w), _complex(m[1], p)))
    return tuple(out)


@dataclass(frozen=True)
class PremeasureConfig:
    a: complex
    b: complex
    g: float = 1.0
    n_odd: int = 1
    omega0: float = 0.1
    dt: float = 0.0

    @classmethod
    def from_dict(cls, d: dict) -> PremeasureConfig:
        path = ()
        d = _dict(d, path)
        _reject_unknown(d, ("a", "b", "g", "n_odd", "omega0", "dt"), path)
        a, b = _amplitudes(d, path)
        g = _real(d, "g", path, 1.0)
        if g == 0:
            raise ConfigError(("g",), "must be nonzero")
        n_odd = _int(d, "n_odd", path, 1, minimum=1)
        if n_odd % 2 != 1:
            raise ConfigError(("n_odd",), "must be odd")
        return cls(a, b, g, n_odd, _real(d, "omega0", path, 0.1), _real(d, "dt", path, 0.0, nonneg=True))

    def to_dict(self) -> dict:
        return {"a": encode_complex(self.a), "b": encode_complex(self.b), "g": self.g,
                "n_odd": self.n_odd, "omega0": self.omega0, "dt": self.dt}


@dataclass(frozen=True)
class DecohereConfig:
    a: complex
    b: complex
    omega0: float = 0.1
    bath: BathConfig = field(default_factory=BathConfig)
    times: TimeGrid = field(default_factory=TimeGrid)

    @classmethod
    def from_dict(cls, d: dict) -> DecohereConfig:
        path = ()
        d = _dict(d, path)
        _reject_unknown(d, ("a", "b", "omega0", "bath", "times"), path)
        a, b = _amplitudes(d, path)
        bath = BathConfig.from_value(d["bath"], ("bath",)) if "bath" in d else BathConfig()
        times = TimeGrid.from_value(d["times"], ("times",)) if "times" in d else TimeGrid()
        return cls(a, b, _real(d, "omega0", path, 0.1), bath, times)

    def to_dict(self) -> dict:
        return {"a": encode_complex(self.a), "b": encode_complex(self.b), "omega0": self.omega0,
                "bath": self.bath.to_value(), "times": self.times.to_value()}


@dataclass(frozen=True)
class OracleConfig:
    a: complex
    b: complex
    omega0: float = 0.1
    beta: float = 1.0
    modes: tuple[tuple[float, complex], ...] | None = None
    k_modes: int = 5
    omega_max: float = 2.0
    g_range: tuple[float, float] = (0.1, 0.3)
    n_max: int | tuple[int, ...] | None = None
    method: str = "factorized"
    max_dim: int = 16384
    times: TimeGrid = field(default_factory=lambda: TimeGrid(0.0, 10.0, 20))
    tolerance: float = 1e-4
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> OracleConfig:
        path = ()
        d = _dict(d, path)
        _reject_unknown(d, ("a", "b", "omega0", "bath", "n_max", "method", "max_dim", "times",
                            "tolerance", "seed"), path)
        a, b = _amplitudes(d, path)
        bd = _dict(d.get("bath", {}), ("bath",))
        _reject_unknown(bd, ("modes", "stratified", "beta"), ("bath",))
        beta = _beta(bd, ("bath",), 1.0)
        modes = _modes(bd, ("bath",)) if "modes" in bd else None
        k_modes, omega_max, g_range = 5, 2.0, (0.1, 0.3)
        if "stratified" in bd:
            sp = ("bath", "stratified")
            sd = _dict(bd["stratified"], sp)
            _reject_unknown(sd, ("K", "omega_max", "g_range"), sp)
            k_modes = _int(sd, "K", sp, 5, minimum=0)
            omega_max = _real(sd, "omega_max", sp, 2.0, positive=True)
            if "g_range" in sd:
                gr = sd["g_range"]
                if (not isinstance(gr, list) or len(gr) != 2
                        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in gr)
                        or gr[0] > gr[1]):
                    raise ConfigError(sp + ("g_range",), "expected [low, high]")
                g_range = (float(gr[0]), float(gr[1]))
        n_max = d.get("n_max")
        if n_max is not None:
            if isinstance(n_max, list):
                if not all(isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in n_max):
                    raise ConfigError(("n_max",), "cutoffs must be nonnegative integers")
                n_max = tuple(n_max)
            elif isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 0:
                raise ConfigError(("n_max",), "expected a nonnegative integer, a list of them, or null")
        method = d.get("method", "factorized")
        if method not in ("factorized", "dense"):
            raise ConfigError(("method",), "must be \"factorized\" or \"dense\"")
        times = TimeGrid.from_value(d["times"], ("times",)) if "times" in d else TimeGrid(0.0, 10.0, 20)
        return cls(a, b, _real(d, "omega0", path, 0.1), beta, modes, k_modes, omega_max, g_range,
                   n_max, method, _int(d, "max_dim", path, 16384, minimum=4), times,
                   _real(d, "tolerance", path, 1e-4, positive=True), _int(d, "seed", path, 0, minimum=0))

    def to_dict(self) -> dict:
        bath: dict[str, Any] = {"beta": _encode_beta(self.beta)}
        if self.modes is not None:
            bath["modes"] = [[w, encode_complex(g)] for w, g in self.modes]
        else:
            bath["stratified"] = {"K": self.k_modes, "omega_max": self.omega_max, "g_range": list(self.g_range)}
        n_max = list(self.n_max) if isinstance(self.n_max, tuple) else self.n_max
        return {"a": encode_complex(self.a), "b": encode_complex(self.b), "omega0": self.omega0,
                "bath": bath, "n_max": n_max, "method": self.method, "max_dim": self.max_dim,
                "times": self.times.to_value(), "tolerance": self.tolerance, "seed": self.seed}


@dataclass(frozen=True)
class ScanConfig:
    a: complex | None = None
    b: complex | None = None
    decohered: bool = True
    rho: tuple | None = None
    n_theta: int = 10
    n_phi: int = 10
    random_count: int = 0
    tolerance: float = 1e-8
    xy_points: int = 72
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> ScanConfig:
        path = ()
        d = _dict(d, path)
        _reject_unknown(d, ("state", "grid", "tolerance", "xy_points", "seed"), path)
        sd = _dict(d.get("state", {"a": 2 ** -0.5, "b": 2 ** -0.5}), ("state",))
        _reject_unknown(sd, ("a", "b", "decohered", "rho"), ("state",))
        a = b = rho = None
        decohered = bool(sd.get("decohered", True))
        if "rho" in sd:
            rho = _rho(sd["rho"], ("state", "rho"))
        else:
            a, b = _amplitudes(sd, ("state",))
        gd = _dict(d.get("grid", {}), ("grid",))
        _reject_unknown(gd, ("n_theta", "n_phi", "random"), ("grid",))
        return cls(a, b, decohered, rho, _int(gd, "n_theta", ("grid",), 10, minimum=1),
                   _int(gd, "n_phi", ("grid",), 10, minimum=1), _int(gd, "random", ("grid",), 0, minimum=0),
                   _real(d, "tolerance", path, 1e-8, positive=True), _int(d, "xy_points", path, 72, minimum=1),
                   _int(d, "seed", path, 0, minimum=0))

    def to_dict(self) -> dict:
        if self.rho is not None:
            state: dict[str, Any] = {"rho": [[encode_complex(z) for z in row] for row in self.rho]}
        else:
            state = {"a": encode_complex(self.a), "b": encode_complex(self.b), "decohered": self.decohered}
        return {"state": state, "grid": {"n_theta": self.n_theta, "n_phi": self.n_phi, "random": self.random_count},
                "tolerance": self.tolerance, "xy_points": self.xy_points, "seed": self.seed}

    def density(self) -> np.ndarray:
        if self.rho is not None:
            return np.array(self.rho, dtype=complex)
        from .bath import initial_sa_density

        rho = initial_sa_density(self.a, self.b)
        return np.diag(np.diag(rho)) if self.decohered else rho


def _rho(v, path) -> tuple:
    if not isinstance(v, list) or len(v) != 4 or not all(isinstance(r, list) and len(r) == 4 for r in v):
        raise ConfigError(path, "expected a 4x4 matrix of numbers or [re, im] pairs")
    rows = tuple(tuple(_complex(z, path + (i, j)) for j, z in enumerate(r)) for i, r in enumerate(v))
    from .hilbert import density_violations

    bad = density_violations(np.array(rows), (2, 2))
    if bad:
        raise ConfigError(path, "not a density matrix: " + "; ".join(map(str, bad)))
    return rows


@dataclass(frozen=True)
class EnvarianceConfig:
    c0: complex
    c1: complex
    phi: float = 0.0
    denominator_cap: int = 10000
    tol: float = 1e-10

    @classmethod
    def from_dict(cls, d: dict) -> EnvarianceConfig:
        path = ()
        d = _dict(d, path)
        _reject_unknown(d, ("c0", "c1", "phi", "denominator_cap", "tol"), path)
        if "c0" not in d:
            raise ConfigError(("c0",), "missing required field")
        c0 = _complex(d["c0"], ("c0",))
        if abs(c0) > 1:
            raise ConfigError(("c0",), "|c0| must be <= 1")
        c1 = _complex(d["c1"], ("c1",)) if "c1" in d else complex(math.sqrt(max(0.0, 1 - abs(c0) ** 2)))
        n = abs(c0) ** 2 + abs(c1) ** 2
        if abs(n - 1) > 1e-9:
            raise ConfigError(("c1",), f"|c0|^2 + |c1|^2 = {n:.12g}, expected 1")
        s = math.sqrt(n)
        return cls(c0 / s, c1 / s, _real(d, "phi", path, 0.0), _int(d, "denominator_cap", path, 10000, minimum=2),
                   _real(d, "tol", path, 1e-10, positive=True))

    def to_dict(self) -> dict:
        return {"c0": encode_complex(self.c0), "c1": encode_complex(self.c1), "phi": self.phi,
                "denominator_cap": self.denominator_cap, "tol": self.tol}


CONFIG_TYPES = {
    "premeasure": PremeasureConfig,
    "decohere": DecohereConfig,
    "oracle": OracleConfig,
    "scan": ScanConfig,
    "envariance": EnvarianceConfig,
}


def locate(text: str, path: tuple) -> int | None:
    """Best-effort 1-based line of the JSON key at ``path`` in ``text``."""
    pos, found = 0, None
    for part in path:
        if not isinstance(part, str):
            continue
        idx = text.find(json.dumps(part), pos)
        if idx < 0:
            break
        pos = idx
        found = text.count("\n", 0, idx) + 1
    return found


def load(command: str, text: str):
    """Parse and validate a config document for ``command``."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError((), f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None
    try:
        return CONFIG_TYPES[command].from_dict(raw)
    except ConfigError as exc:
        if exc.line is None:
            exc.line = locate(text, exc.path)
        raise
