"""Von Neumann pre-measurement of a qubit by a two-level apparatus.

Covers the family of unitaries that copy the sigma_z eigenstates of the
system onto the apparatus, the coupling Hamiltonian that generates one of
them, and the alternative ``x sigma_x + y sigma_y`` apparatus bases that make
the pre-measured state ambiguous.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    KET_MINUS,
    KET_PLUS,
    SIGMA_X,
    SIGMA_Y,
    JointState,
    ValidationError,
    expm_hermitian,
    tensor_product,
)

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class DeltaParams:
    delta22: complex
    phi24: float
    phi32: float

    def __post_init__(self):
        if abs(self.delta22) > 1.0:
            raise ValidationError(f"|delta22| must be <= 1, got {abs(self.delta22):.6g}")


@dataclass(frozen=True)
class XYBasisParams:
    x: float
    y: float

    def __post_init__(self):
        if self.x == 0 and self.y == 0:
            raise ValidationError("x + iy must be nonzero")

    @property
    def ratio(self) -> complex:
        """(x + iy) / (x - iy), a pure phase."""
        return complex(self.x, self.y) / complex(self.x, -self.y)


@dataclass(frozen=True)
class PremeasurementConfig:
    omega0: float = 0.1
    g: float = 1.0
    n_odd: int = 1

    def __post_init__(self):
        if self.g == 0:
            raise ValidationError("coupling g must be nonzero")
        if self.n_odd < 1 or self.n_odd % 2 != 1:
            raise ValidationError(f"n_odd must be an odd positive integer, got {self.n_odd}")

    @property
    def tau_pm(self) -> float:
        return pre_measurement_time(self.g, self.n_odd)


def pre_measurement_time(g: float, n_odd: int = 1) -> float:
    """Interaction time n*pi/|g| at which the coupling acts as a CNOT-like copy."""
    return n_odd * math.pi / abs(g)


def build_delta(p: DeltaParams) -> np.ndarray:
    """General 4x4 unitary mapping ``(a, 0, b, 0)`` to ``(a, 0, 0, b)``.

    Rows and columns follow the ``|++>, |+->, |-+>, |-->`` ordering. The
    off-diagonal block is fixed by unitarity once ``delta22`` and the two
    phases are chosen.
    """
    d22 = complex(p.delta22)
    s = math.sqrt(max(0.0, 1.0 - abs(d22) ** 2))
    e24 = cmath.exp(1j * p.phi24)
    e32 = cmath.exp(1j * p.phi32)
    return np.array(
        [
            [1, 0, 0, 0],
            [0, d22, 0, e24 * s],
            [0, e32 * s, 0, -e24 * e32 * d22.conjugate()],
            [0, 0, 1, 0],
        ],
        dtype=complex,
    )


def build_h_sa(g: float) -> np.ndarray:
    """System-apparatus coupling ``(g/4)(1 - sigma_z) x (1 - sigma_x)``."""
    if g == 0:
        raise ValidationError("coupling g must be nonzero")
    one = np.eye(2, dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    return (g / 4) * tensor_product(one - sz, one - SIGMA_X)


def premeasurement_unitary(g: float, t: float) -> np.ndarray:
    """Closed-form ``exp(-i H_SA t)``; only the ``|-+>, |-->`` block evolves."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    e = cmath.exp(-1j * g * t)
    u = np.eye(4, dtype=complex)
    u[2:, 2:] = [[(1 + e) / 2, (1 - e) / 2], [(1 - e) / 2, (1 + e) / 2]]
    return u


def premeasurement_unitary_numeric(g: float, t: float) -> np.ndarray:
    return expm_hermitian(build_h_sa(g), -1j * t)


def _check_normalized(a: complex, b: complex):
    n = abs(a) ** 2 + abs(b) ** 2
    if abs(n - 1.0) > _NORM_TOL:
        raise ValidationError(f"|a|^2 + |b|^2 = {n:.15g}, expected 1")


def free_evolve(s_plus: complex, s_minus: complex, dt: float, omega0: float) -> tuple[complex, complex]:
    """Evolve ``s+|+> + s-|->`` under ``omega0 sigma_z`` for ``dt``.

    The apparatus sits in ``|+>`` meanwhile, which only contributes a global
    phase; that phase is dropped.
    """
    _check_normalized(s_plus, s_minus)
    return s_plus * cmath.exp(-1j * omega0 * dt), s_minus * cmath.exp(1j * omega0 * dt)


def premeasure(a: complex, b: complex, cfg: PremeasurementConfig | None = None) -> JointState:
    """Apply the pre-measurement coupling for ``tau_pm`` to ``(a|+> + b|->)|+>``.

    Returns ``a|++> + b|-->``; the ``|+->`` and ``|-+>`` amplitudes are
    rounded to exact zeros when below 1e-15 so downstream outputs are clean.
    """
    cfg = cfg or PremeasurementConfig()
    _check_normalized(a, b)
    psi0 = tensor_product(a * KET_PLUS + b * KET_MINUS, KET_PLUS)
    psi = premeasurement_unitary(cfg.g, cfg.tau_pm) @ psi0
    psi[np.abs(psi) < 1e-15] = 0
    psi /= np.linalg.norm(psi)
    return JointState((2, 2), psi)


def xy_eigenbasis(p: XYBasisParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvectors ``|+>_xy, |->_xy`` of ``x sigma_x + y sigma_y``.

    Both carry ``1/sqrt(2)`` on ``|->`` and ``sqrt((x - iy)/(x + iy))/sqrt(2)``
    on ``|+>``; the square-root branch is the one equal to ``(x - iy)/r`` so
    that ``|+>_xy`` has eigenvalue ``+r``.
    """
    r = math.hypot(p.x, p.y)
    c = complex(p.x, -p.y) / (r * math.sqrt(2))
    plus = np.array([c, 1 / math.sqrt(2)], dtype=complex)
    minus = np.array([c, -1 / math.sqrt(2)], dtype=complex)
    return plus, minus


def xy_operator(p: XYBasisParams) -> np.ndarray:
    return p.x * SIGMA_X + p.y * SIGMA_Y


def xy_product_basis(p: XYBasisParams) -> np.ndarray:
    """4x4 matrix whose columns are ``|++>_xy, |+->_xy, |-+>_xy, |-->_xy``."""
    plus, minus = xy_eigenbasis(p)
    single = np.column_stack([plus, minus])
    return np.kron(single, single)


def express_in_xy(state, p: XYBasisParams) -> np.ndarray:
    """Coefficients of a two-qubit state in the product xy eigenbasis."""
    amps = state.amplitudes if isinstance(state, JointState) else np.asarray(state, dtype=complex)
    basis = xy_product_basis(p)
    # The basis is orthonormal, so the inverse is the adjoint.
    return basis.conj().T @ amps


def from_xy(coefficients, p: XYBasisParams) -> np.ndarray:
    return xy_product_basis(p) @ np.asarray(coefficients, dtype=complex)
