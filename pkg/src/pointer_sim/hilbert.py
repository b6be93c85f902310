"""Dense complex linear algebra on small tensor-product Hilbert spaces.

Conventions used throughout the package:

* hbar = 1, frequencies are angular.
* Subsystem 0 is the measured system S, subsystem 1 the apparatus A and
  any further subsystems are bath modes.
* The two-level basis is ordered ``|+>, |->`` (sigma_z eigenvalues +1, -1),
  so the joint S+A basis reads ``|++>, |+->, |-+>, |-->``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-10
NORM_TOL = 1e-12

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

KET_PLUS = np.array([1, 0], dtype=complex)
KET_MINUS = np.array([0, 1], dtype=complex)

# sigma_z eigenvalue labels of the joint S+A basis, in basis order.
SA_LABELS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


class ValidationError(ValueError):
    """Raised when an operator or state breaks one of its invariants."""


@dataclass(frozen=True)
class Violation:
    """A single broken density-operator invariant and its measured residual."""

    invariant: str
    residual: float

    def __str__(self):
        return f"{self.invariant} (residual {self.residual:.3g})"


class InvalidDensityError(ValidationError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        super().__init__("invalid density operator: " + "; ".join(map(str, self.violations)))


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a finite 2-d complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class JointState:
    """Normalized pure state on a tensor-product space."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if any(d < 1 for d in dims):
            raise ValidationError(f"subsystem dimensions must be positive: {dims}")
        if amps.size != prod(dims):
            raise ValidationError(f"{amps.size} amplitudes do not match dims {dims}")
        if not np.all(np.isfinite(amps)):
            raise ValidationError("state has non-finite amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized (norm {norm:.15g})")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    def density(self) -> DensityOperator:
        return DensityOperator(self.dims, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Density matrix with subsystem metadata.

    Construction only checks shape and finiteness; use :func:`validate_density`
    to enforce hermiticity, unit trace and positivity.
    """

    dims: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        m = as_matrix(self.matrix)
        n = prod(dims)
        if m.shape != (n, n):
            raise ValidationError(f"matrix shape {m.shape} does not match dims {dims}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of one or more matrices (or vectors), left to right."""
    if not ops:
        raise ValueError("tensor_product needs at least one operand")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    if not np.all(np.isfinite(out)):
        raise ValidationError("tensor product has non-finite entries")
    return out


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Trace out every subsystem not listed in ``keep``.

    The kept subsystems stay in their original order.
    """
    dims = rho.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep or len(keep) >= n or keep[0] < 0 or keep[-1] >= n:
        raise ValidationError(f"keep={keep} is not a nonempty proper subset of {list(range(n))}")
    drop = [i for i in range(n) if i not in keep]

    t = rho.matrix.reshape(dims + dims)
    # Contract each dropped ket index against its bra partner, highest first
    # so remaining axis positions stay valid.
    for i in sorted(drop, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    kept_dims = tuple(dims[i] for i in keep)
    d = prod(kept_dims)
    return DensityOperator(kept_dims, t.reshape(d, d))


def hermiticity_residual(h) -> float:
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def expm_hermitian(h, scale: complex) -> np.ndarray:
    """Return ``exp(scale * h)`` for Hermitian ``h`` via eigendecomposition.

    Raises:
        ValidationError: if ``h`` is not Hermitian within 1e-10.
    """
    h = as_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got {h.shape}")
    res = hermiticity_residual(h)
    if res > HERMITIAN_TOL:
        raise ValidationError(f"matrix is not Hermitian (residual {res:.3g})")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(scale * w)) @ v.conj().T


def density_violations(rho, dims) -> list[Violation]:
    """List every density-operator invariant ``rho`` breaks (empty if valid)."""
    m = as_matrix(rho)
    n = prod(int(d) for d in dims)
    if m.shape != (n, n):
        raise ValidationError(f"matrix shape {m.shape} does not match dims {tuple(dims)}")
    found = []
    herm = hermiticity_residual(m)
    if herm > HERMITIAN_TOL:
        found.append(Violation("hermiticity", herm))
    tr = abs(np.trace(m) - 1.0)
    if tr > TRACE_TOL:
        found.append(Violation("trace", float(tr)))
    lowest = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    if lowest < -POSITIVITY_TOL:
        found.append(Violation("positivity", lowest))
    return found


def validate_density(rho, dims) -> DensityOperator:
    """Check ``rho`` against the density-operator invariants.

    Returns:
        The validated :class:`DensityOperator`.

    Raises:
        InvalidDensityError: listing each violated invariant with its residual
            (for positivity the residual is the most negative eigenvalue).
    """
    found = density_violations(rho, dims)
    if found:
        raise InvalidDensityError(found)
    return DensityOperator(tuple(dims), rho)


def ket(*labels: int) -> np.ndarray:
    """Product basis ket from sigma_z labels, e.g. ``ket(1, -1)`` is ``|+->``."""
    parts = [KET_PLUS if s == 1 else KET_MINUS for s in labels]
    return tensor_product(*parts)


def fix_global_phase(vec) -> np.ndarray:
    """Rotate ``vec`` so its first non-negligible entry is real and nonnegative."""
    v = np.asarray(vec, dtype=complex).copy()
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size:
        z = v[nz[0]]
        v *= abs(z) / z
    return v


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def random_density(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    a = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)
