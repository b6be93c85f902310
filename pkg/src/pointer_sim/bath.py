"""Analytic phase damping of the system+apparatus pair by a thermal boson bath.

The apparatus couples to the bath through ``sigma_z^A (g b^dag + g^* b)``,
which commutes with every sigma_z label. Each density-matrix element in the
``|s a>`` basis therefore only picks up a free phase and a Gaussian decay
``exp(-(a_p - a_q)^2 I1(t))``. ``I1`` is the decoherence integral

    I1(t) = int_0^inf J(w) (1 - cos wt) / w^2 coth(beta w / 2) dw

or its discrete sum for a finite list of modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .hilbert import SA_LABELS, DensityOperator, ValidationError

QUAD_RTOL = 1e-9


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimate: float, error: float):
        self.estimate = estimate
        self.error = error
        super().__init__(f"{message} (estimate {estimate:.12g}, error bound {error:.3g})")


@dataclass(frozen=True)
class BathSpec:
    """Thermal bath, either a finite mode list or an ohmic continuum.

    ``beta = math.inf`` is zero temperature, where coth is replaced by 1
    exactly.
    """

    kind: str
    beta: float
    modes: tuple[tuple[float, complex], ...] = ()
    eta: float = 0.0
    omega_c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("discrete", "ohmic"):
            raise ValidationError(f"unknown bath kind {self.kind!r}")
        if not self.beta > 0:
            raise ValidationError(f"beta must be positive (or inf), got {self.beta}")
        if self.kind == "discrete":
            modes = tuple((float(w), complex(g)) for w, g in self.modes)
            if any(not w > 0 for w, _ in modes):
                raise ValidationError("all mode frequencies must be positive")
            object.__setattr__(self, "modes", modes)
        elif not (self.eta > 0 and self.omega_c > 0):
            raise ValidationError("ohmic bath needs eta > 0 and omega_c > 0")

    @classmethod
    def ohmic(cls, eta: float, omega_c: float, beta: float = math.inf) -> BathSpec:
        return cls("ohmic", beta, eta=eta, omega_c=omega_c)

    @classmethod
    def discrete(cls, modes: Sequence[tuple[float, complex]], beta: float = math.inf) -> BathSpec:
        return cls("discrete", beta, modes=tuple(modes))

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)


@dataclass(frozen=True)
class CoherenceCurve:
    times: np.ndarray
    i1_values: np.ndarray
    coherence_14: np.ndarray
    populations: np.ndarray = field(repr=False)

    def decay_factor(self) -> np.ndarray:
        """``exp(-4 I1(t))``, the relative size of the ``|++><--|`` coherence."""
        return np.exp(-4 * self.i1_values)


def coth_half(beta: float, omega):
    """``coth(beta*omega/2)``, identically 1 at zero temperature."""
    if math.isinf(beta):
        return np.ones_like(np.asarray(omega, dtype=float))
    return 1.0 / np.tanh(beta * np.asarray(omega, dtype=float) / 2)


def spectral_density(spec: BathSpec, omega: float) -> float:
    """Ohmic spectral density ``eta * w * exp(-w / omega_c)``."""
    if spec.kind != "ohmic":
        raise ValidationError("a discrete bath has no pointwise spectral density; use i1_discrete")
    if omega < 0:
        raise ValidationError("omega must be nonnegative")
    return spec.eta * omega * math.exp(-omega / spec.omega_c)


def _i1_integrand(spec: BathSpec, t: float):
    eta, wc, beta = spec.eta, spec.omega_c, spec.beta
    zero_t = spec.zero_temperature
    # omega -> 0 limit: eta t^2 / beta at finite temperature, 0 at T = 0.
    at_zero = 0.0 if zero_t else eta * t * t / beta

    def f(w):
        if w == 0.0:
            return at_zero
        # 1 - cos(wt) written as 2 sin^2(wt/2) to avoid cancellation near 0.
        s = math.sin(w * t / 2)
        val = eta * math.exp(-w / wc) * 2 * s * s / w
        if not zero_t:
            val /= math.tanh(beta * w / 2)
        return val

    return f


def i1_cutoff(spec: BathSpec, t: float) -> float:
    """Upper integration limit; past it the integrand is below exp(-50)."""
    wc = spec.omega_c
    return wc * max(50.0, 10.0 / (wc * t))


def i1_tail_bound(spec: BathSpec, upper: float) -> float:
    """Closed-form bound on the integral discarded beyond ``upper``."""
    c = 1.0 if spec.zero_temperature else 1.0 / math.tanh(spec.beta * upper / 2)
    return 2 * spec.eta * spec.omega_c * math.exp(-upper / spec.omega_c) * c / upper


def i1_integral(spec: BathSpec, t: float) -> float:
    """Decoherence integral for an ohmic bath by adaptive quadrature.

    The integration range is split at every half period ``pi/t`` of the
    oscillating factor and at a few multiples of the cutoff frequency.

    Raises:
        QuadratureError: if the quadrature reports non-convergence or the
            error bound exceeds the relative tolerance.
    """
    if spec.kind != "ohmic":
        raise ValidationError("i1_integral needs an ohmic bath; use i1_discrete")
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if t == 0:
        return 0.0
    upper = i1_cutoff(spec, t)
    f = _i1_integrand(spec, t)
    wc = spec.omega_c
    breaks = set(k * wc for k in (1, 5, 10, 20))
    n_half = int(upper * t / math.pi)
    breaks.update(k * math.pi / t for k in range(1, min(n_half, 4000) + 1))
    points = sorted(p for p in breaks if 0 < p < upper)
    value, err, info = integrate.quad(
        f, 0.0, upper, points=points, epsabs=0.0, epsrel=QUAD_RTOL,
        limit=max(200, 4 * len(points)), full_output=True,
    )[:3]
    tail = i1_tail_bound(spec, upper)
    total_err = err + tail
    if not math.isfinite(value) or total_err > 10 * QUAD_RTOL * max(abs(value), 1e-300):
        raise QuadratureError("I1 quadrature did not converge", value, total_err)
    return max(value, 0.0)


def i1_discrete(spec: BathSpec, t: float) -> float:
    """``sum_k |g_k|^2 (1 - cos w_k t) / w_k^2 coth(beta w_k / 2)``."""
    if spec.kind != "discrete":
        raise ValidationError("i1_discrete needs a discrete bath")
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if not spec.modes:
        return 0.0
    w = np.array([m[0] for m in spec.modes])
    g2 = np.array([abs(m[1]) ** 2 for m in spec.modes])
    s = np.sin(w * t / 2)
    return float(np.sum(g2 * 2 * s * s / w**2 * coth_half(spec.beta, w)))


def i1(spec: BathSpec, t: float) -> float:
    return i1_integral(spec, t) if spec.kind == "ohmic" else i1_discrete(spec, t)


def phi_prefactor(spec: BathSpec, t: float) -> complex:
    """Scalar prefactor of the total propagator for a discrete bath.

    With ``phi_k(t) = (1 - exp(i w_k t)) / w_k`` it is

        exp(-sum |g_k|^2 phi_k^* / w_k) exp(i t sum |g_k|^2 / w_k)
            exp(sum |g_k|^2 |phi_k|^2 / 2)

    and has unit modulus.
    """
    if spec.kind != "discrete":
        raise ValidationError("phi_prefactor is only defined for a discrete bath")
    if t < 0:
        raise ValidationError("t must be nonnegative")
    exponent = 0j
    for w, g in spec.modes:
        g2 = abs(g) ** 2
        phi = (1 - np.exp(1j * w * t)) / w
        exponent += -g2 * np.conj(phi) / w + 1j * t * g2 / w + 0.5 * g2 * abs(phi) ** 2
    return complex(np.exp(exponent))


def _check_label(v):
    if v not in (1, -1):
        raise ValidationError(f"labels must be +1 or -1, got {v!r}")


def element_factor(s_p: int, a_p: int, s_q: int, a_q: int, omega0: float, i1_value: float, t: float) -> complex:
    for v in (s_p, a_p, s_q, a_q):
        _check_label(v)
    phase = -1j * omega0 * t * ((s_p - s_q) + (a_p - a_q))
    return complex(np.exp(phase - (a_p - a_q) ** 2 * i1_value))


def evolve_element(rho0_elem: complex, s_p: int, a_p: int, s_q: int, a_q: int,
                   omega0: float, i1_value: float, t: float) -> complex:
    """Map one ``<s_p a_p| rho |s_q a_q>`` element from time 0 to ``t``."""
    return rho0_elem * element_factor(s_p, a_p, s_q, a_q, omega0, i1_value, t)


def evolution_factors(omega0: float, i1_value: float, t: float) -> np.ndarray:
    """4x4 array of elementwise factors in the ``|++>, |+->, |-+>, |-->`` basis."""
    out = np.empty((4, 4), dtype=complex)
    for p, (sp, ap) in enumerate(SA_LABELS):
        for q, (sq, aq) in enumerate(SA_LABELS):
            out[p, q] = element_factor(sp, ap, sq, aq, omega0, i1_value, t)
    return out


def _as_sa_matrix(rho0) -> np.ndarray:
    m = rho0.matrix if isinstance(rho0, DensityOperator) else np.asarray(rho0, dtype=complex)
    if m.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 system+apparatus density matrix, got {m.shape}")
    return m


def evolve_density(rho0, omega0: float, spec: BathSpec, t: float) -> DensityOperator:
    """Reduced system+apparatus state at time ``t``."""
    m = _as_sa_matrix(rho0)
    if t == 0:
        return DensityOperator((2, 2), m)
    return DensityOperator((2, 2), m * evolution_factors(omega0, i1(spec, t), t))


def coherence_curve(rho0, omega0: float, spec: BathSpec, times: Sequence[float],
                    executor=None) -> CoherenceCurve:
    """Evaluate ``I1`` and the ``|++><--|`` coherence on a time grid.

    ``executor`` may be any object with an order-preserving ``map`` (for
    instance a ``concurrent.futures`` executor); points are independent.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValidationError("times must be a nonempty 1-d sequence")
    if np.any(np.diff(times) < 0):
        raise ValidationError("times must be ascending")
    m = _as_sa_matrix(rho0)
    mapper = executor.map if executor is not None else map
    i1_values = np.array(list(mapper(lambda t: i1(spec, t), times)), dtype=float)
    coh = np.empty(times.size, dtype=complex)
    pops = np.empty((times.size, 4))
    for k, (t, v) in enumerate(zip(times, i1_values)):
        rho_t = m * evolution_factors(omega0, v, t)
        coh[k] = rho_t[0, 3]
        pops[k] = np.real(np.diag(rho_t))
    return CoherenceCurve(times, i1_values, coh, pops)


def initial_sa_density(a: complex, b: complex) -> np.ndarray:
    """Density matrix of the pre-measured state ``a|++> + b|-->``."""
    psi = np.array([a, 0, 0, b], dtype=complex)
    return np.outer(psi, psi.conj())
