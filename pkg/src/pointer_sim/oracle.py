"""Brute-force check of the analytic phase-damping map.

The bath is truncated to ``n_max + 1`` Fock levels per mode and the full
Hamiltonian

    H = w0 (sz_S + sz_A) + sz_A sum_k (g_k b_k^dag + g_k^* b_k) + sum_k w_k b_k^dag b_k

is exponentiated exactly. Two routes are available:

* ``"dense"`` builds ``H`` on the whole S+A+bath space and diagonalizes it
  once. Limited by ``max_dim``.
* ``"factorized"`` uses that ``H`` is block diagonal in the sigma_z labels of
  S and A, and that inside each block it is a sum of commuting single-mode
  terms. The same truncated propagator is then a product of per-mode
  exponentials, which keeps many modes with deep cutoffs affordable.

Both routes exponentiate the truncated operators numerically and never use
the closed form they are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .bath import BathSpec, evolve_density
from .hilbert import (
    SA_LABELS,
    SIGMA_Z,
    DensityOperator,
    ValidationError,
    expm_hermitian,
    partial_trace,
    tensor_product,
)

DEFAULT_MAX_DIM = 16384
TAIL_TOL = 1e-6


class TruncationError(ValidationError):
    """The Fock cutoff discards too much thermal weight."""


class DimensionCapError(ValidationError):
    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(f"dense dimension {required} exceeds cap {cap}; raise max_dim to at least {required}")


def thermal_tail(omega: float, beta: float, n_max: int) -> float:
    """Thermal weight above ``n_max``: ``exp(-(n_max+1) beta omega)``."""
    if math.isinf(beta):
        return 0.0
    return math.exp(-(n_max + 1) * beta * omega)


def adequate_cutoff(omega: float, beta: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest ``n_max`` whose thermal tail is below ``tail_tol``."""
    if math.isinf(beta):
        return 0
    n = max(0, math.ceil(-math.log(tail_tol) / (beta * omega)) - 1)
    while thermal_tail(omega, beta, n) >= tail_tol:
        n += 1
    return n


@dataclass(frozen=True)
class TruncatedBath:
    """Discrete bath with a Fock cutoff per mode.

    ``n_max`` may be a single int shared by all modes or one per mode. With
    ``strict`` set, building a thermal state from an inadequate cutoff
    raises :class:`TruncationError`.
    """

    modes: tuple[tuple[float, complex], ...]
    n_max: tuple[int, ...]
    beta: float
    strict: bool = True

    def __init__(self, modes, n_max, beta, strict=True):
        modes = tuple((float(w), complex(g)) for w, g in modes)
        if any(not w > 0 for w, _ in modes):
            raise ValidationError("all mode frequencies must be positive")
        if not beta > 0:
            raise ValidationError("beta must be positive (or inf)")
        if isinstance(n_max, (int, np.integer)):
            n_max = (int(n_max),) * len(modes)
        n_max = tuple(int(n) for n in n_max)
        if len(n_max) != len(modes):
            raise ValidationError(f"{len(n_max)} cutoffs for {len(modes)} modes")
        if any(n < 0 for n in n_max):
            raise ValidationError("cutoffs must be nonnegative")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "n_max", n_max)
        object.__setattr__(self, "beta", float(beta))
        object.__setattr__(self, "strict", bool(strict))

    @classmethod
    def with_adequate_cutoffs(cls, modes, beta, tail_tol: float = TAIL_TOL) -> TruncatedBath:
        modes = tuple(modes)
        return cls(modes, [adequate_cutoff(w, beta, tail_tol) for w, _ in modes], beta)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(n + 1 for n in self.n_max)

    def tails(self) -> list[float]:
        return [thermal_tail(w, self.beta, n) for (w, _), n in zip(self.modes, self.n_max)]

    def truncation_bound(self) -> float:
        """Total thermal weight discarded by the cutoffs."""
        kept = math.prod(1 - t for t in self.tails())
        return 1 - kept

    def check_adequacy(self, tail_tol: float = TAIL_TOL):
        for k, tail in enumerate(self.tails()):
            if tail >= tail_tol:
                w = self.modes[k][0]
                raise TruncationError(
                    f"mode {k} (omega={w:g}) loses thermal weight {tail:.3g} >= {tail_tol:g}; "
                    f"use n_max >= {adequate_cutoff(w, self.beta, tail_tol)}"
                )

    def as_bath_spec(self) -> BathSpec:
        return BathSpec.discrete(self.modes, self.beta)


def stratified_modes(k_modes: int, omega_max: float, g_range=(0.1, 0.3), rng=None) -> list[tuple[float, float]]:
    """Frequencies ``omega_max * k / K`` for ``k = 1..K`` with uniform random couplings."""
    rng = np.random.default_rng(rng)
    lo, hi = g_range
    return [(omega_max * k / k_modes, float(rng.uniform(lo, hi))) for k in range(1, k_modes + 1)]


def annihilation(levels: int) -> np.ndarray:
    """Truncated ``b`` with ``b|n> = sqrt(n)|n-1>``."""
    return np.diag(np.sqrt(np.arange(1, levels)), k=1).astype(complex)


def mode_hamiltonian(omega: float, g: complex, a: int, levels: int) -> np.ndarray:
    """``omega b^dag b + a (g b^dag + g^* b)`` on one truncated mode."""
    b = annihilation(levels)
    bd = b.conj().T
    return omega * (bd @ b) + a * (g * bd + np.conj(g) * b)


def mode_thermal_populations(omega: float, beta: float, levels: int) -> np.ndarray:
    """Populations proportional to ``exp(-n beta omega)``, renormalized after truncation."""
    if math.isinf(beta):
        p = np.zeros(levels)
        p[0] = 1.0
        return p
    p = np.exp(-np.arange(levels) * beta * omega)
    return p / p.sum()


def _dense_dim(bath: TruncatedBath) -> int:
    return 4 * math.prod(bath.levels)


def build_total_hamiltonian(omega0: float, bath: TruncatedBath, max_dim: int = DEFAULT_MAX_DIM) -> np.ndarray:
    """Full Hamiltonian on S (x) A (x) modes, in that tensor order."""
    dim = _dense_dim(bath)
    if dim > max_dim:
        raise DimensionCapError(dim, max_dim)
    levels = bath.levels
    eye2 = np.eye(2, dtype=complex)
    eye_bath = np.eye(math.prod(levels), dtype=complex)
    h = omega0 * tensor_product(SIGMA_Z, eye2, eye_bath) + omega0 * tensor_product(eye2, SIGMA_Z, eye_bath)

    def on_mode(k, op):
        factors = [np.eye(n, dtype=complex) for n in levels]
        factors[k] = op
        return tensor_product(*factors) if factors else np.eye(1, dtype=complex)

    coupling = np.zeros_like(eye_bath)
    free = np.zeros_like(eye_bath)
    for k, ((w, g), n) in enumerate(zip(bath.modes, levels)):
        b = annihilation(n)
        bd = b.conj().T
        coupling += on_mode(k, g * bd + np.conj(g) * b)
        free += on_mode(k, w * (bd @ b))
    h += tensor_product(eye2, SIGMA_Z, coupling)
    h += tensor_product(eye2, eye2, free)
    return h


def thermal_state(bath: TruncatedBath, max_dim: int = DEFAULT_MAX_DIM) -> DensityOperator:
    """Product thermal state of the truncated modes (dense, diagonal).

    Raises:
        TruncationError: if ``bath.strict`` and a cutoff is inadequate.
    """
    if bath.strict:
        bath.check_adequacy()
    dim = math.prod(bath.levels)
    if dim > max_dim:
        raise DimensionCapError(dim, max_dim)
    diag = np.ones(1)
    for (w, _), n in zip(bath.modes, bath.levels):
        diag = np.kron(diag, mode_thermal_populations(w, bath.beta, n))
    return DensityOperator(bath.levels or (1,), np.diag(diag.astype(complex)))


def _sa_matrix(rho_sa0) -> np.ndarray:
    m = rho_sa0.matrix if isinstance(rho_sa0, DensityOperator) else np.asarray(rho_sa0, dtype=complex)
    if m.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 system+apparatus state, got {m.shape}")
    return m


class ExactPropagator:
    """Cached exact evolution for one truncated bath and one ``omega0``.

    Eigendecompositions are computed on first use and never mutated
    afterwards, so an instance can be shared between threads once warmed.
    """

    def __init__(self, bath: TruncatedBath, omega0: float, method: str = "factorized",
                 max_dim: int = DEFAULT_MAX_DIM):
        if method not in ("dense", "factorized"):
            raise ValidationError(f"unknown method {method!r}")
        if bath.strict:
            bath.check_adequacy()
        self.bath = bath
        self.omega0 = float(omega0)
        self.method = method
        self.max_dim = max_dim
        if method == "dense" and _dense_dim(bath) > max_dim:
            raise DimensionCapError(_dense_dim(bath), max_dim)

    @cached_property
    def _populations(self) -> list[np.ndarray]:
        return [mode_thermal_populations(w, self.bath.beta, n)
                for (w, _), n in zip(self.bath.modes, self.bath.levels)]

    @cached_property
    def _dense_eig(self):
        h = build_total_hamiltonian(self.omega0, self.bath, self.max_dim)
        return np.linalg.eigh(h)

    @cached_property
    def _mode_eigs(self):
        # (mode k, apparatus label a) -> eigendecomposition of the mode block.
        out = {}
        for k, ((w, g), n) in enumerate(zip(self.bath.modes, self.bath.levels)):
            for a in (1, -1):
                out[k, a] = np.linalg.eigh(mode_hamiltonian(w, g, a, n))
        return out

    def total_state(self, rho_sa0, t: float) -> np.ndarray:
        """Full ``U rho_SA(0) (x) rho_B U^dag`` (dense route only)."""
        if self.method != "dense":
            raise ValidationError("the full state is only available with method='dense'")
        rho_b = np.ones(1)
        for p in self._populations:
            rho_b = np.kron(rho_b, p)
        rho0 = np.kron(_sa_matrix(rho_sa0), np.diag(rho_b))
        w, v = self._dense_eig
        u = (v * np.exp(-1j * t * w)) @ v.conj().T
        return u @ rho0 @ u.conj().T

    def _mode_overlap(self, k: int, a_p: int, a_q: int, t: float) -> complex:
        """``Tr[U_k^{a_p} rho_k U_k^{a_q}^dag]`` for one mode."""
        wp, vp = self._mode_eigs[k, a_p]
        wq, vq = self._mode_eigs[k, a_q]
        up = (vp * np.exp(-1j * t * wp)) @ vp.conj().T
        uq = (vq * np.exp(-1j * t * wq)) @ vq.conj().T
        return complex(np.sum(up * self._populations[k][None, :] * uq.conj()))

    def reduced_state(self, rho_sa0, t: float) -> DensityOperator:
        m = _sa_matrix(rho_sa0)
        if self.method == "dense":
            dims = (2, 2) + self.bath.levels
            full = DensityOperator(dims, self.total_state(m, t))
            return partial_trace(full, [0, 1])
        out = np.empty((4, 4), dtype=complex)
        overlaps = {}
        for a_p in (1, -1):
            for a_q in (1, -1):
                val = 1.0 + 0j
                for k in range(len(self.bath.modes)):
                    val *= self._mode_overlap(k, a_p, a_q, t)
                overlaps[a_p, a_q] = val
        for p, (sp, ap) in enumerate(SA_LABELS):
            for q, (sq, aq) in enumerate(SA_LABELS):
                free = np.exp(-1j * self.omega0 * t * ((sp + ap) - (sq + aq)))
                out[p, q] = m[p, q] * free * overlaps[ap, aq]
        return DensityOperator((2, 2), out)


def evolve_exact(rho_sa0, bath: TruncatedBath, omega0: float, t: float,
                 method: str = "factorized", max_dim: int = DEFAULT_MAX_DIM) -> DensityOperator:
    """Reduced S+A state after exact evolution with the truncated bath."""
    return ExactPropagator(bath, omega0, method, max_dim).reduced_state(rho_sa0, t)


@dataclass(frozen=True)
class OracleReport:
    times: np.ndarray
    max_abs_diff: np.ndarray
    truncation_bound: float
    method: str = "factorized"
    exact_states: list = field(default_factory=list, repr=False)

    def passed(self, tol: float) -> bool:
        return bool(np.all(self.max_abs_diff < tol))


def compare_analytic(rho_sa0, bath: TruncatedBath, omega0: float, times: Sequence[float],
                     method: str = "factorized", max_dim: int = DEFAULT_MAX_DIM,
                     executor=None) -> OracleReport:
    """Elementwise max deviation between exact and analytic reduced states."""
    m = _sa_matrix(rho_sa0)
    prop = ExactPropagator(bath, omega0, method, max_dim)
    spec = bath.as_bath_spec()
    times = np.asarray(times, dtype=float)

    def one(t):
        exact = prop.reduced_state(m, t).matrix
        analytic = evolve_density(m, omega0, spec, t).matrix
        return float(np.max(np.abs(exact - analytic))), exact

    # Warm the caches before any concurrent use.
    if times.size:
        one(times[0])
    mapper = executor.map if executor is not None else map
    results = list(mapper(one, times))
    return OracleReport(
        times=times,
        max_abs_diff=np.array([r[0] for r in results]),
        truncation_bound=bath.truncation_bound(),
        method=method,
        exact_states=[r[1] for r in results],
    )
