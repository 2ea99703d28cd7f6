import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_config
from wannier_stark import (
    DomainError,
    PhaseState,
    SymmetricState,
    SystemParams,
    contour_grid,
    equations_of_motion,
    grad_potential_full,
    hamiltonian_full,
    hamiltonian_symmetric,
    hessian_potential_full,
    potential_full,
    potential_symmetric,
    saddle_analytic,
)
from wannier_stark.model import mirror_asymmetry

R_S = 3 ** 0.25 / 2
Z_S = 3 ** 0.75 / 2
V_S = -2 * 3 ** 0.75


def rot_z(q, phi):
    c, s = np.cos(phi), np.sin(phi)
    R = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    return np.concatenate([R @ q[:3], R @ q[3:]])


class TestParams:
    @pytest.mark.parametrize("Z,F", [(0.5, 1.0), (0.0, 1.0), (2.0, 0.0), (2.0, -1.0), (np.nan, 1.0)])
    def test_rejects_bad_params(self, Z, F):
        with pytest.raises(DomainError):
            SystemParams(Z, F)

    def test_fractional_charge_allowed(self):
        assert SystemParams(1.5, 0.3).Z == 1.5

    def test_symmetric_state_needs_positive_r(self):
        with pytest.raises(DomainError):
            SymmetricState(0.0, 1.0, 0.0, 0.0)

    def test_phase_state_rejects_collision(self):
        with pytest.raises(DomainError):
            PhaseState(np.array([1.0, 0, 0, 1.0, 0, 0]), np.zeros(6))


class TestPotentials:
    def test_symmetric_at_saddle(self, he):
        assert potential_symmetric(R_S, Z_S, he) == pytest.approx(V_S, rel=1e-14)
        assert potential_symmetric(0.658037, 1.139754, he) == pytest.approx(-4.559014, abs=1e-6)

    def test_symmetric_hand_value(self, he):
        assert potential_symmetric(1.0, 0.0, he) == pytest.approx(-3.5, abs=1e-15)

    def test_symmetric_domain(self, he):
        with pytest.raises(DomainError):
            potential_symmetric(0.0, 1.0, he)
        with pytest.raises(DomainError):
            potential_symmetric(-0.1, 1.0, he)

    def test_hamiltonian_symmetric(self, he):
        assert hamiltonian_symmetric(SymmetricState(R_S, Z_S, 0, 0), he) == pytest.approx(V_S, rel=1e-14)
        assert hamiltonian_symmetric(SymmetricState(1.0, 0.0, 2.0, 0.0), he) == pytest.approx(-2.5)

    def test_full_hand_value(self, he):
        q = np.array([1.0, 0, 0, -1.0, 0, 0])
        assert potential_full(q, he) == pytest.approx(-3.5, abs=1e-15)

    def test_full_matches_symmetric_on_embedding(self, he):
        q = np.array([R_S, 0, Z_S, -R_S, 0, Z_S])
        assert potential_full(q, he) == pytest.approx(V_S, rel=1e-14)

    def test_full_domain(self, he):
        with pytest.raises(DomainError):
            potential_full(np.zeros(6), he)
        with pytest.raises(DomainError):
            potential_full(np.array([1.0, 2, 3, 1.0, 2, 3]), he)


class TestDerivatives:
    def test_gradient_vs_central_difference(self, he):
        rng = np.random.default_rng(7)
        h = 1e-5
        worst = 0.0
        for _ in range(100):
            q = random_config(rng)
            g = grad_potential_full(q, he)
            fd = np.empty(6)
            for i in range(6):
                e = np.zeros(6)
                e[i] = h
                fd[i] = (potential_full(q + e, he) - potential_full(q - e, he)) / (2 * h)
            worst = max(worst, np.max(np.abs(fd - g)) / np.max(np.abs(g)))
        assert worst < 1e-6

    def test_stationary_at_saddle(self, he):
        q = saddle_analytic(he).embedded_config
        assert np.linalg.norm(grad_potential_full(q, he)) < 1e-10

    def test_constant_field_force_far_out(self, he):
        q = np.array([0.3, 0.1, 1e7, 0.2, -0.4, 0.5])
        g = grad_potential_full(q, he)
        assert g[2] == pytest.approx(-he.F, rel=1e-10)

    def test_hessian_symmetric_and_matches_gradient(self, he):
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(20):
            q = random_config(rng)
            H = hessian_potential_full(q, he)
            assert np.max(np.abs(H - H.T)) < 1e-10
            fd = np.column_stack([
                (grad_potential_full(q + h * e, he) - grad_potential_full(q - h * e, he)) / (2 * h)
                for e in np.eye(6)])
            assert np.max(np.abs(fd - H)) < 1e-6 * max(1.0, np.max(np.abs(H)))

    def test_eom_fixed_point(self, he):
        s = saddle_analytic(he)
        dq, dp = equations_of_motion(PhaseState(s.embedded_config, np.zeros(6)), he)
        assert np.all(dq == 0) and np.max(np.abs(dp)) < 1e-10
        dq, dp = equations_of_motion(SymmetricState(s.r_s, s.z_s, 0.0, 0.0), he)
        assert np.all(dq == 0) and np.max(np.abs(dp)) < 1e-10

    def test_eom_symmetric_velocity_is_half_momentum(self, he):
        dq, _ = equations_of_motion(SymmetricState(1.0, 0.5, 0.3, -0.8), he)
        np.testing.assert_allclose(dq, [0.15, -0.4])

    def test_symmetric_eom_consistent_with_full(self, he):
        st_ = SymmetricState(0.8, 1.3, 0.4, -0.2)
        dq, dp = equations_of_motion(st_, he)
        full = st_.embed()
        dqf, dpf = equations_of_motion(full, he)
        # r = x1, z = z1; per-electron momenta are half of (p_r, p_z)
        assert dqf[0] == pytest.approx(dq[0])
        assert dqf[2] == pytest.approx(dq[1])
        assert 2 * dpf[0] == pytest.approx(dp[0], rel=1e-12)
        assert 2 * dpf[2] == pytest.approx(dp[1], rel=1e-12)

    def test_eom_energy_derivative_vanishes(self, he):
        rng = np.random.default_rng(11)
        for _ in range(10):
            q = random_config(rng)
            p = rng.normal(size=6)
            dq, dp = equations_of_motion(PhaseState(q, p), he)
            dH = grad_potential_full(q, he) @ dq + p @ dp
            assert abs(dH) < 1e-12 * (1 + np.linalg.norm(dp) * np.linalg.norm(p))


coord = st.floats(0.2, 4.0)
mom = st.floats(-3.0, 3.0)


@settings(max_examples=200, deadline=None)
@given(r=coord, z=st.floats(-4.0, 4.0), pr=mom, pz=mom, phi=st.floats(0, 2 * np.pi))
def test_embedding_consistency(r, z, pr, pz, phi):
    params = SystemParams(2.0, 1.0)
    s = SymmetricState(r, z, pr, pz)
    full = s.embed(phi)
    assert full.is_mirror_symmetric(1e-12)
    assert hamiltonian_full(full, params) == pytest.approx(hamiltonian_symmetric(s, params),
                                                         rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), phi=st.floats(-np.pi, np.pi))
def test_axial_symmetry(seed, phi):
    params = SystemParams(2.0, 1.0)
    q = random_config(np.random.default_rng(seed))
    assert potential_full(rot_z(q, phi), params) == pytest.approx(potential_full(q, params),
                                                                rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(Z=st.floats(1.0, 50.0), s=st.sampled_from([0.25, 4.0]))
def test_saddle_field_scaling(Z, s):
    base = saddle_analytic(SystemParams(Z, 1.0))
    sc = saddle_analytic(SystemParams(Z, s))
    assert sc.r_s == pytest.approx(base.r_s * s ** -0.5, rel=1e-10)
    assert sc.z_s == pytest.approx(base.z_s * s ** -0.5, rel=1e-10)
    assert sc.V_s == pytest.approx(base.V_s * s ** 0.5, rel=1e-10)


def test_mirror_asymmetry_measure(he):
    y = SymmetricState(1.0, 2.0, 0.1, 0.2).embed(0.7).as_vector()
    assert mirror_asymmetry(y) < 1e-15
    y[0] += 1e-3
    assert mirror_asymmetry(y) == pytest.approx(1e-3, rel=1e-6)


class TestContour:
    def test_default_grid_finds_saddle(self, he):
        g = contour_grid(he)
        assert g.V.shape == (200, 200)
        assert np.all(np.isfinite(g.V))
        r, z = g.discrete_saddle()
        dr = g.r_axis[1] - g.r_axis[0]
        dz = g.z_axis[1] - g.z_axis[0]
        assert abs(r - R_S) <= dr and abs(z - Z_S) <= dz

    def test_weaker_field_moves_saddle_along_ray(self):
        p = SystemParams(2.0, 0.5)
        g = contour_grid(p, (0.05, 3.0 * np.sqrt(2)), (0.0, 4.0 * np.sqrt(2)), 300, 300)
        r, z = g.discrete_saddle()
        assert z > Z_S
        assert r / z == pytest.approx(1 / np.sqrt(3), rel=0.02)

    @pytest.mark.parametrize("kw", [dict(r_range=(0.0, 1.0)), dict(r_range=(-1.0, 1.0)), dict(n_r=1)])
    def test_bad_grid(self, he, kw):
        with pytest.raises(DomainError):
            contour_grid(he, **kw)
