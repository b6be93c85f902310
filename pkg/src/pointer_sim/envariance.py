"""Envariance of two-branch entangled states and Born's rule by branch counting."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .hilbert import JointState, ValidationError, fix_global_phase

MATERIALIZE_LIMIT = 1024


@dataclass(frozen=True)
class SchmidtDecomposition:
    """``psi = sum_i c_i |s_i> |a_i>``; bases stored as columns."""

    coefficients: np.ndarray
    basis_s: np.ndarray = field(repr=False)
    basis_a: np.ndarray = field(repr=False)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.coefficients)

    def reconstruct(self) -> np.ndarray:
        return sum(c * np.kron(self.basis_s[:, i], self.basis_a[:, i])
                   for i, c in enumerate(self.coefficients))


def schmidt_decompose(psi, split: tuple[int, int] | None = None, cutoff: float = 1e-14) -> SchmidtDecomposition:
    """Schmidt form of a bipartite pure state via SVD.

    Coefficients come out sorted by decreasing modulus. Each system vector
    has its first nonzero component made real and nonnegative; the phase
    removed from it moves into the coefficient.
    """
    if isinstance(psi, JointState):
        amps = psi.amplitudes
        split = split or (psi.dims[0], int(np.prod(psi.dims[1:])))
    else:
        amps = np.asarray(psi, dtype=complex).reshape(-1)
        if split is None:
            raise ValidationError("split is required for a raw amplitude vector")
    d_s, d_a = split
    if d_s * d_a != amps.size:
        raise ValidationError(f"split {split} does not match {amps.size} amplitudes")
    u, s, vh = np.linalg.svd(amps.reshape(d_s, d_a), full_matrices=False)
    keep = s > cutoff
    u, s, vh = u[:, keep], s[keep], vh[keep, :]
    coeffs = s.astype(complex)
    basis_s = np.empty_like(u)
    for i in range(u.shape[1]):
        fixed = fix_global_phase(u[:, i])
        nz = np.flatnonzero(np.abs(u[:, i]) > 1e-12)[0]
        coeffs[i] *= u[nz, i] / fixed[nz]
        basis_s[:, i] = fixed
    return SchmidtDecomposition(coeffs, basis_s, vh.T.copy())


def _two_vectors(basis) -> tuple[np.ndarray, np.ndarray]:
    b = np.asarray(basis, dtype=complex)
    if b.ndim != 2 or b.shape[1] < 2:
        raise ValidationError("need two basis vectors (as columns)")
    return b[:, 0], b[:, 1]


def swap_system(phi: float, basis_s) -> np.ndarray:
    """``e^{i phi}|s1><s0| + e^{-i phi}|s0><s1|`` on the system.

    On a system larger than the two Schmidt vectors the orthogonal
    complement is left untouched so the result stays unitary.
    """
    s0, s1 = _two_vectors(basis_s)
    return _swap(s0, s1, phi)


def counter_swap(phi: float, phi0: float, phi1: float, basis_a) -> np.ndarray:
    """Environment swap that undoes :func:`swap_system` when ``|c0| = |c1|``."""
    a0, a1 = _two_vectors(basis_a)
    return _swap(a0, a1, phi1 - phi0 - phi)


def _swap(v0, v1, phase: float) -> np.ndarray:
    e = cmath.exp(1j * phase)
    u = e * np.outer(v1, v0.conj()) + e.conjugate() * np.outer(v0, v1.conj())
    proj = np.outer(v0, v0.conj()) + np.outer(v1, v1.conj())
    return u + (np.eye(len(v0)) - proj)


def reversal_residual(psi, u_s, u_a) -> float:
    """``|| (U_S (x) U_A) psi - psi ||`` with ``U_S`` on the first factor."""
    amps = psi.amplitudes if isinstance(psi, JointState) else np.asarray(psi, dtype=complex)
    op = np.kron(u_s, u_a)
    return float(np.linalg.norm(op @ amps - amps))


def is_envariant(psi, u_s, u_a, tol: float = 1e-10, up_to_phase: bool = False) -> bool:
    """Whether ``U_A U_S psi == psi`` within ``tol`` (strict inequality).

    With ``up_to_phase`` the comparison ignores a global phase.
    """
    amps = psi.amplitudes if isinstance(psi, JointState) else np.asarray(psi, dtype=complex)
    out = np.kron(u_s, u_a) @ amps
    if up_to_phase:
        overlap = np.vdot(amps, out)
        if abs(overlap) > 0:
            out = out * (abs(overlap) / overlap)
    return float(np.linalg.norm(out - amps)) < tol


@dataclass(frozen=True)
class FineGrainedState:
    """Equal-weight expansion of a two-branch state over ``a + b`` branches."""

    a_count: int
    b_count: int
    phi0: float = 0.0
    phi1: float = 0.0

    def __post_init__(self):
        if self.a_count < 1 or self.b_count < 1:
            raise ValidationError("branch counts must be positive")

    @property
    def total(self) -> int:
        return self.a_count + self.b_count

    @property
    def branch_modulus(self) -> float:
        return 1 / math.sqrt(self.total)

    def branch_amplitudes(self) -> np.ndarray:
        n = self.total
        amps = np.full(n, self.branch_modulus, dtype=complex)
        amps[: self.a_count] *= cmath.exp(1j * self.phi0)
        amps[self.a_count:] *= cmath.exp(1j * self.phi1)
        return amps

    def materialize(self) -> JointState:
        """Explicit state on S (x) M (x) A with ``|s_i>|m_k>|a_k>`` branches.

        S is two-dimensional; M and A both have ``a + b`` levels.
        """
        n = self.total
        if n > MATERIALIZE_LIMIT:
            raise ValidationError(f"a + b = {n} exceeds materialization limit {MATERIALIZE_LIMIT}")
        vec = np.zeros((2, n, n), dtype=complex)
        amps = self.branch_amplitudes()
        for k in range(n):
            vec[0 if k < self.a_count else 1, k, k] = amps[k]
        return JointState((2, n, n), vec.reshape(-1))


def fine_grain(c0: complex, c1: complex, a_count: int, b_count: int, tol: float = 1e-9) -> FineGrainedState:
    """Split ``c0|s0 m0> + c1|s1 m1>`` into ``a + b`` equal-modulus branches.

    Raises:
        ValidationError: if ``|c0|^2`` and ``|c1|^2`` are not ``a/(a+b)`` and
            ``b/(a+b)`` within ``tol``.
    """
    n = a_count + b_count
    r0 = abs(abs(c0) ** 2 - a_count / n)
    r1 = abs(abs(c1) ** 2 - b_count / n)
    if max(r0, r1) > tol:
        raise ValidationError(
            f"|c0|^2, |c1|^2 do not match counts {a_count}/{n}, {b_count}/{n} "
            f"(residual {max(r0, r1):.3g}); use rational_approx first"
        )
    return FineGrainedState(a_count, b_count, cmath.phase(c0) if c0 else 0.0, cmath.phase(c1) if c1 else 0.0)


def born_by_counting(state: FineGrainedState) -> tuple[Fraction, Fraction]:
    """Outcome probabilities as fractions of equally likely branches."""
    n = state.total
    return Fraction(state.a_count, n), Fraction(state.b_count, n)


def rational_approx(p: float, denominator_cap: int) -> tuple[int, int, float]:
    """Branch counts ``(a, b)`` with ``a/(a+b) <= p < (a+1)/(a+b)``.

    Uses the largest denominator allowed, ``a + b = denominator_cap``, so the
    gap ``1/(a+b)`` is as small as the cap permits.
    """
    if not 0 < p < 1:
        raise ValidationError("p must lie strictly between 0 and 1")
    if denominator_cap < 2:
        raise ValidationError("denominator_cap must be at least 2")
    n = int(denominator_cap)
    # Floating floor: p given as a rounded fraction (1/3 -> 0.333...) still
    # lands on its exact numerator.
    a = min(max(math.floor(p * n), 0), n)
    return a, n - a, 1 / n
