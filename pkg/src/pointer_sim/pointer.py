"""Coherence measures, decoherence time and the pointer-basis scan."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bath import CoherenceCurve
from .hilbert import DensityOperator, JointState, ValidationError
from .measurement import XYBasisParams, express_in_xy, xy_eigenbasis

UNIQUENESS_TOL = 1e-8


@dataclass(frozen=True)
class BasisCandidate:
    """A single-qubit orthonormal basis, applied to both S and A.

    ``vectors`` holds the two basis kets as columns.
    """

    label: str
    vectors: np.ndarray = field(repr=False)
    theta: float | None = None
    phi: float | None = None

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        if v.shape != (2, 2):
            raise ValidationError("basis vectors must form a 2x2 matrix")
        if np.max(np.abs(v.conj().T @ v - np.eye(2))) > 1e-10:
            raise ValidationError(f"basis {self.label!r} is not orthonormal")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def bloch(cls, theta: float, phi: float, label: str | None = None) -> BasisCandidate:
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        e = cmath.exp(1j * phi)
        v = np.array([[c, -s * e.conjugate()], [s * e, c]], dtype=complex)
        return cls(label or f"theta={theta:.6g},phi={phi:.6g}", v, theta, phi)

    @classmethod
    def from_xy(cls, p: XYBasisParams, label: str | None = None) -> BasisCandidate:
        plus, minus = xy_eigenbasis(p)
        return cls(label or f"xy({p.x:.6g},{p.y:.6g})", np.column_stack([plus, minus]),
                   math.pi / 2, math.atan2(p.y, p.x))

    @property
    def is_pointer(self) -> bool:
        return self.theta == 0.0

    def product_basis(self) -> np.ndarray:
        return np.kron(self.vectors, self.vectors)


POINTER_BASIS = BasisCandidate.bloch(0.0, 0.0, "pointer")


@dataclass(frozen=True)
class ScanReport:
    candidates: list[tuple[BasisCandidate, float]]
    minimizer: BasisCandidate
    min_norm: float
    margin: float
    is_unique: bool
    tolerance: float


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


def in_basis(rho, basis: BasisCandidate) -> np.ndarray:
    b = basis.product_basis()
    return b.conj().T @ _matrix(rho) @ b


def coherence_norm(rho, basis: BasisCandidate) -> float:
    """Squared Frobenius norm of the off-diagonal part in the product basis."""
    m = in_basis(rho, basis)
    off = m - np.diag(np.diag(m))
    return float(np.sum(np.abs(off) ** 2))


def default_grid(n_theta: int = 10, n_phi: int = 10) -> list[BasisCandidate]:
    """Pointer basis plus a uniform grid with theta in (0, pi/2], phi in [0, 2pi)."""
    grid = [POINTER_BASIS]
    for i in range(1, n_theta + 1):
        theta = (math.pi / 2) * i / n_theta
        for j in range(n_phi):
            grid.append(BasisCandidate.bloch(theta, 2 * math.pi * j / n_phi))
    return grid


def random_grid(count: int, seed: int | None = None) -> list[BasisCandidate]:
    rng = np.random.default_rng(seed)
    grid = [POINTER_BASIS]
    for theta, phi in zip(rng.uniform(0, math.pi / 2, count), rng.uniform(0, 2 * math.pi, count)):
        grid.append(BasisCandidate.bloch(float(theta), float(phi)))
    return grid


def pointer_scan(rho_final, grid: Sequence[BasisCandidate], tolerance: float = UNIQUENESS_TOL,
                 executor=None) -> ScanReport:
    """Find the candidate basis in which ``rho_final`` is closest to diagonal.

    ``is_unique`` requires the runner-up to sit more than ``tolerance`` above
    the minimum. A basis-independent state such as ``I/4`` is reported as
    degenerate rather than forced to a winner.
    """
    grid = list(grid)
    if len(grid) < 2:
        raise ValidationError("scan grid needs at least two candidates")
    mapper = executor.map if executor is not None else map
    norms = list(mapper(lambda c: coherence_norm(rho_final, c), grid))
    order = sorted(range(len(grid)), key=lambda i: (norms[i], i))
    best, second = order[0], order[1]
    margin = norms[second] - norms[best]
    return ScanReport(
        candidates=list(zip(grid, norms)),
        minimizer=grid[best],
        min_norm=norms[best],
        margin=margin,
        is_unique=margin > tolerance,
        tolerance=tolerance,
    )


def decoherence_time(curve: CoherenceCurve, threshold: float = math.exp(-1)) -> float:
    """First time the coherence ratio ``exp(-4 I1)`` reaches ``threshold``.

    Linear interpolation between the bracketing grid points.

    Raises:
        ValueError: if the threshold is never reached on the grid.
    """
    if len(curve.times) == 0:
        raise ValidationError("empty coherence curve")
    if abs(curve.coherence_14[0]) == 0:
        raise ValidationError("initial coherence is zero")
    ratio = curve.decay_factor()
    hit = np.flatnonzero(ratio <= threshold)
    if hit.size == 0:
        raise ValueError(f"threshold {threshold:.6g} not reached; final ratio {ratio[-1]:.6g}")
    k = hit[0]
    if k == 0:
        return float(curve.times[0])
    t0, t1 = curve.times[k - 1], curve.times[k]
    r0, r1 = ratio[k - 1], ratio[k]
    return float(t0 + (r0 - threshold) * (t1 - t0) / (r0 - r1))


@dataclass(frozen=True)
class AmbiguitySolution:
    params: XYBasisParams
    sign: int
    residual: float


@dataclass(frozen=True)
class AmbiguityReport:
    a: complex
    b: complex
    solutions: list[AmbiguitySolution]
    # Angles atan2(y, x) solving b = sign * a (x+iy)/(x-iy); empty when |a| != |b|.
    analytic_angles: list[tuple[float, int]]

    @property
    def found(self) -> bool:
        return bool(self.solutions)


def xy_circle_grid(n: int = 72) -> list[XYBasisParams]:
    return [XYBasisParams(math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n)) for k in range(n)]


def ambiguity_check(psi, grid: Sequence[XYBasisParams] | None = None, tol: float = 1e-10) -> AmbiguityReport:
    """Search alternative xy bases in which ``a|++> + b|-->`` is a pre-measurement.

    A grid point qualifies when, in its product eigenbasis, either the
    ``|+->_xy, |-+>_xy`` amplitudes vanish (sign +1, perfect correlation) or
    the ``|++>_xy, |-->_xy`` amplitudes vanish (sign -1, anticorrelation).
    """
    amps = psi.amplitudes if isinstance(psi, JointState) else np.asarray(psi, dtype=complex)
    if np.max(np.abs(amps[1:3])) > 1e-12:
        raise ValidationError("ambiguity_check expects a state of the form a|++> + b|-->")
    a, b = complex(amps[0]), complex(amps[3])
    grid = xy_circle_grid() if grid is None else list(grid)
    solutions = []
    for p in grid:
        c = express_in_xy(amps, p)
        for sign, idx in ((1, (1, 2)), (-1, (0, 3))):
            res = float(max(abs(c[idx[0]]), abs(c[idx[1]])))
            if res < tol:
                solutions.append(AmbiguitySolution(p, sign, res))
    angles = []
    if abs(a) > 0 and abs(abs(a) - abs(b)) < 1e-12:
        alpha = cmath.phase(b / a)
        for sign in (1, -1):
            base = (alpha if sign == 1 else alpha + math.pi) / 2
            angles.extend(((base + k * math.pi) % (2 * math.pi), sign) for k in (0, 1))
    return AmbiguityReport(a, b, solutions, sorted(angles))
