import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from pointer_sim.bath import BathSpec, coherence_curve, initial_sa_density
from pointer_sim.hilbert import ValidationError, random_density
from pointer_sim.measurement import XYBasisParams, premeasure
from pointer_sim.pointer import (
    POINTER_BASIS,
    BasisCandidate,
    ambiguity_check,
    coherence_norm,
    decoherence_time,
    default_grid,
    in_basis,
    pointer_scan,
    random_grid,
    xy_circle_grid,
)

S = 1 / math.sqrt(2)


def brute_coherence_norm(rho, vecs):
    """Sum of |<ij|rho|kl>|^2 over distinct product basis labels."""
    kets = [np.kron(vecs[:, i], vecs[:, j]) for i in range(2) for j in range(2)]
    total = 0.0
    for p, u in enumerate(kets):
        for q, v in enumerate(kets):
            if p != q:
                total += abs(np.vdot(u, rho @ v)) ** 2
    return total


class TestCoherenceNorm:
    def test_pure_bell_pointer(self):
        assert coherence_norm(initial_sa_density(S, S), POINTER_BASIS) == pytest.approx(0.5)

    def test_mixture_in_sigma_x(self):
        rho = np.diag([0.5, 0, 0, 0.5])
        basis = BasisCandidate.from_xy(XYBasisParams(1, 0))
        assert coherence_norm(rho, basis) == pytest.approx(0.25, abs=1e-15)
        assert brute_coherence_norm(rho, basis.vectors) == pytest.approx(0.25, abs=1e-15)

    def test_matches_brute_force(self, rng):
        for _ in range(10):
            rho = random_density(4, rng)
            basis = BasisCandidate.bloch(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
            assert coherence_norm(rho, basis) == pytest.approx(brute_coherence_norm(rho, basis.vectors), abs=1e-13)

    def test_invariant_under_relabeling(self, rng):
        rho = random_density(4, rng)
        b = BasisCandidate.bloch(0.7, 1.1)
        swapped = BasisCandidate("swapped", b.vectors[:, ::-1] * np.array([1j, -1]))
        assert coherence_norm(rho, b) == pytest.approx(coherence_norm(rho, swapped), abs=1e-14)

    def test_in_basis_is_unitary_change(self, rng):
        rho = random_density(4, rng)
        m = in_basis(rho, BasisCandidate.bloch(1.0, 2.0))
        assert_allclose(np.linalg.eigvalsh(m), np.linalg.eigvalsh(rho), atol=1e-14)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValidationError):
            BasisCandidate("bad", np.array([[1, 1], [0, 1]]))


class TestScan:
    @pytest.mark.parametrize("p", [0.5, 0.36, 0.9])
    def test_mixture_prefers_pointer(self, p):
        report = pointer_scan(np.diag([p, 0, 0, 1 - p]), default_grid())
        assert report.minimizer.is_pointer
        assert report.min_norm < 1e-15
        assert report.is_unique and report.margin > 1e-6
        assert all(n > 0 for c, n in report.candidates if not c.is_pointer)

    def test_grid_shape(self):
        grid = default_grid(10, 10)
        assert len(grid) == 101
        assert grid[0] is POINTER_BASIS
        assert max(c.theta for c in grid) == pytest.approx(math.pi / 2)

    def test_random_grid_reproducible(self):
        a = [(c.theta, c.phi) for c in random_grid(20, seed=4)]
        assert a == [(c.theta, c.phi) for c in random_grid(20, seed=4)]

    def test_maximally_mixed_is_degenerate(self):
        report = pointer_scan(np.eye(4) / 4, default_grid())
        assert not report.is_unique
        assert report.margin < 1e-15

    def test_decohered_state_prefers_pointer(self):
        rho0 = initial_sa_density(0.6, 0.8)
        curve = coherence_curve(rho0, 0.1, BathSpec.ohmic(1, 1), [0.0, 10.0])
        rho = rho0.copy()
        rho[0, 3] = curve.coherence_14[-1]
        rho[3, 0] = np.conj(rho[0, 3])
        report = pointer_scan(rho, default_grid())
        assert report.minimizer.is_pointer and report.is_unique

    def test_needs_two_candidates(self):
        with pytest.raises(ValidationError):
            pointer_scan(np.eye(4) / 4, [POINTER_BASIS])


class TestDecoherenceTime:
    def test_zero_temperature_ohmic(self):
        curve = coherence_curve(initial_sa_density(S, S), 0.1, BathSpec.ohmic(1, 1), np.linspace(0, 2, 2001))
        assert decoherence_time(curve) == pytest.approx(math.sqrt(math.exp(0.5) - 1), abs=1e-5)

    def test_stronger_coupling_is_faster(self):
        times = np.linspace(0, 5, 501)
        t1 = [decoherence_time(coherence_curve(initial_sa_density(S, S), 0.1, BathSpec.ohmic(eta, 1), times))
              for eta in (0.5, 1, 2, 4)]
        assert all(x > y for x, y in zip(t1, t1[1:]))

    def test_not_reached(self):
        curve = coherence_curve(initial_sa_density(S, S), 0.1, BathSpec.ohmic(0.01, 1), [0.0, 0.5, 1.0])
        with pytest.raises(ValueError):
            decoherence_time(curve)


class TestAmbiguity:
    def test_bell_has_alternatives(self):
        report = ambiguity_check(premeasure(S, S))
        assert report.found
        xs = {(round(s.params.x, 12), round(s.params.y, 12), s.sign) for s in report.solutions}
        assert (1.0, 0.0, 1) in xs
        assert (0.0, 1.0, -1) in xs
        assert len(report.analytic_angles) == 4

    def test_complex_phase(self):
        report = ambiguity_check(premeasure(S, 1j * S))
        assert report.found
        angles = {(round(math.degrees(math.atan2(s.params.y, s.params.x))) % 360, s.sign) for s in report.solutions}
        assert (45, 1) in angles
        assert {(round(math.degrees(a)) % 360, sg) for a, sg in report.analytic_angles} == angles

    def test_every_solution_is_a_premeasurement(self):
        for s in ambiguity_check(premeasure(S, S), xy_circle_grid(360)).solutions:
            assert s.residual < 1e-10

    def test_unequal_weights_have_none(self):
        report = ambiguity_check(premeasure(0.6, 0.8), xy_circle_grid(720))
        assert not report.found
        assert report.analytic_angles == []

    def test_requires_premeasured_form(self):
        with pytest.raises(ValidationError):
            ambiguity_check(np.array([0.5, 0.5, 0.5, 0.5]))
