import numpy as np
import pytest
from scipy.linalg import sqrtm

from iga_contact.errors import ConfigurationError, InadmissibleStateError
from iga_contact.materials import (
    KinematicState,
    LinearElastic,
    NeoHookean,
    eval_energy,
    eval_stress,
)

MAT = NeoHookean(0.5, 0.5)


def random_F(rng, scale=0.3):
    while True:
        F = np.eye(2) + scale * rng.standard_normal((2, 2))
        if np.linalg.det(F) > 0.2:
            return F


def psi_of_E(mat, E):
    """Energy as a function of the Green-Lagrange strain via the stretch tensor."""
    U = np.real(sqrtm(np.eye(2) + 2.0 * E))
    return mat.energy(U)


def S_of_E(mat, E):
    U = np.real(sqrtm(np.eye(2) + 2.0 * E))
    return mat.second_piola(U)


def _sym_fd(fun, E, h):
    """Derivative w.r.t. the symmetric tensor E (shear perturbed symmetrically, halved)."""
    out = []
    for I, J in ((0, 0), (1, 1), (0, 1)):
        d = np.zeros((2, 2))
        d[I, J] = d[J, I] = h
        df = (fun(E + d) - fun(E - d)) / (2 * h)
        out.append(df if I == J else 0.5 * df)
    return out


def test_reference_state_is_stress_free():
    F = np.eye(2)
    assert np.allclose(MAT.second_piola(F), 0.0)
    assert MAT.energy(F) == 0.0


def test_energy_example():
    F = np.diag([2.0, 1.0])
    expected = 0.25 * 3 - 0.5 * np.log(2.0) + 0.25 * np.log(2.0) ** 2
    assert abs(eval_energy(MAT, KinematicState(F)) - expected) < 1e-15
    assert abs(expected - 0.52354) < 1e-5


def test_stress_example_matches_energy_derivative():
    F = np.diag([1.2, 1.0])
    E = KinematicState(F).E
    S = MAT.second_piola(F)
    dS = _sym_fd(lambda e: psi_of_E(MAT, e), E, 1e-6)
    np.testing.assert_allclose([S[0, 0], S[1, 1], S[0, 1]], dS, rtol=1e-5, atol=1e-10)


@pytest.mark.parametrize("seed", range(50))
def test_energy_stress_tangent_chain(seed):
    rng = np.random.default_rng(seed)
    mat = NeoHookean(0.2 + rng.random(), 0.2 + rng.random())
    F = random_F(rng)
    E = KinematicState(F).E
    # S = dpsi/dE
    S = mat.second_piola(F)
    fd = _sym_fd(lambda e: psi_of_E(mat, e), E, 1e-6)
    np.testing.assert_allclose([S[0, 0], S[1, 1], S[0, 1]], fd, rtol=1e-5, atol=1e-9)
    # C = dS/dE
    Cm = mat.material_tangent(F)
    fd = _sym_fd(lambda e: S_of_E(mat, e), E, 1e-6)
    for k, (I, J) in enumerate(((0, 0), (1, 1), (0, 1))):
        np.testing.assert_allclose(Cm[:, :, I, J], fd[k], rtol=1e-5, atol=1e-8)
    # P = dpsi/dF, A = dP/dF, dA/dF
    P, A = mat.piola_tangent(F)
    dA = mat.piola_tangent_derivative(F)
    h = 1e-6
    for k in range(2):
        for L in range(2):
            d = np.zeros((2, 2))
            d[k, L] = h
            dpsi = (mat.energy(F + d) - mat.energy(F - d)) / (2 * h)
            assert abs(P[k, L] - dpsi) <= 1e-5 * max(1.0, abs(P[k, L]))
            dP = (mat.piola(F + d) - mat.piola(F - d)) / (2 * h)
            np.testing.assert_allclose(A[:, :, k, L], dP, rtol=1e-5, atol=1e-8)
            dPA = (mat.piola_tangent(F + d)[1] - mat.piola_tangent(F - d)[1]) / (2 * h)
            np.testing.assert_allclose(dA[..., k, L], dPA, rtol=1e-5, atol=1e-7)
    # P = F S and the Voigt tangent is symmetric
    np.testing.assert_allclose(P, F @ S, atol=1e-13)
    state = eval_stress(mat, KinematicState(F))
    np.testing.assert_allclose(state.tangent, state.tangent.T, atol=1e-12)
    np.testing.assert_allclose(state.S, state.S.T, atol=1e-14)


def test_energy_is_minimal_at_reference(rng):
    for _ in range(20):
        F = np.eye(2) + 1e-3 * rng.standard_normal((2, 2))
        assert MAT.energy(F) >= 0.0


def test_frame_invariance(rng):
    for _ in range(10):
        F = random_F(rng)
        a = rng.random() * 2 * np.pi
        Q = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
        np.testing.assert_allclose(MAT.second_piola(Q @ F), MAT.second_piola(F), atol=1e-12)


def test_linear_branch_example():
    mat = LinearElastic(1.0, 0.5)
    F = np.eye(2) + np.diag([0.01, 0.0])
    np.testing.assert_allclose(mat.cauchy(F), [[0.02, 0.0], [0.0, 0.01]], atol=1e-15)


def test_linear_hooke_example_from_strain():
    # sigma = lam tr(eps) I + 2 mu eps with lam = 1, mu = 0.5 and eps = diag(0.01, 0)
    mat = LinearElastic(1.0, 0.5)
    sig = mat.stress(np.diag([0.01, 0.0]))
    np.testing.assert_allclose(sig, [[0.02, 0.0], [0.0, 0.01]], atol=1e-15)


def test_linear_energy_derivative(rng):
    mat = LinearElastic(0.7, 0.4)
    F = np.eye(2) + 0.1 * rng.standard_normal((2, 2))
    P, A = mat.piola_tangent(F)
    h = 1e-6
    for k in range(2):
        for L in range(2):
            d = np.zeros((2, 2))
            d[k, L] = h
            assert abs((mat.energy(F + d) - mat.energy(F - d)) / (2 * h) - P[k, L]) < 1e-8
    assert mat.piola_tangent_derivative(F).shape == (2,) * 6


def test_small_strain_agreement_rate(rng):
    lin, nh = LinearElastic(0.5, 0.5), NeoHookean(0.5, 0.5)
    G = rng.standard_normal((2, 2))
    errs = []
    for k in range(6):
        H = 1e-2 * 0.5**k * G
        errs.append(np.linalg.norm(lin.piola(np.eye(2) + H) - nh.piola(np.eye(2) + H)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 1.9)


def test_inadmissible_state_raises():
    with pytest.raises(InadmissibleStateError):
        MAT.piola(np.diag([1.0, -0.5]))


def test_invalid_parameters():
    with pytest.raises(ConfigurationError):
        NeoHookean(1.0, 0.0)
    with pytest.raises(ConfigurationError):
        LinearElastic(-1.0, 0.1)


def test_from_young():
    m = LinearElastic.from_young(1.0, 0.3)
    assert abs(m.mu - 1 / 2.6) < 1e-15
    assert abs(m.lam - 0.3 / (1.3 * 0.4)) < 1e-15
