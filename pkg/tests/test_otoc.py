import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from almg import InvalidInput, ModelParams, OtocRequest, diagonalize, microcanonical_otoc, squared_commutator
from almg import steady_state_otoc, steady_state_profile
from almg.model import EVEN, ODD
from almg.otoc import EigenbasisPair, operator_matrix

from oracles import dense_hamiltonian, dense_otoc, parity_matrix, spin_matrices

rng = np.random.default_rng(20240611)


def oracle_ops(N, name):
    sz, sp, sm = spin_matrices(N)
    S = N / 2
    ops = {"sp": sp, "sm": sm, "sz": sz, "sx": (sp + sm) / 2, "sy": (sp - sm) / 2j}
    return ops[name] / S


def _state(spec, parity, j):
    return spec.vectors[:, spec.global_index(parity, j)]


@pytest.mark.parametrize(
    "N, xi, alpha, W, V, state",
    [
        (20, 0.5, -0.6, "sp", "sm", (EVEN, 4)),
        (40, 0.3, 0.0, "sx", "sx", (ODD, 10)),
        (60, 0.7, -0.6, "sy", "sx", (EVEN, 17)),
        (100, 0.5, -0.6, "sp", "sm", (EVEN, 30)),
    ],
)
def test_against_dense_conjugation(N, xi, alpha, W, V, state):
    params = ModelParams(N, xi, alpha)
    spec = diagonalize(params)
    times = np.sort(rng.uniform(0, 50, 10))
    res = squared_commutator(OtocRequest(params, state, W, V, times), spec)
    H = dense_hamiltonian(N, xi, alpha)
    psi = _state(spec, *state)
    Wm, Vm = oracle_ops(N, W), oracle_ops(N, V)
    for k, t in enumerate(times):
        F, A, C = dense_otoc(H, Wm, Vm, psi, t)
        assert abs(res.f_values[k] - F) <= 1e-9
        assert abs(res.a_values[k] - A) <= 1e-9
        assert abs(res.c_values[k] - C) <= 1e-9
    assert np.max(np.abs(res.c_values - (res.a_values - 2 * res.f_values))) <= 1e-10


def test_time_zero_is_a_four_matrix_product():
    N = 30
    params = ModelParams(N, 0.4, -0.6)
    spec = diagonalize(params)
    psi = _state(spec, EVEN, 5)
    for W, V in [("sp", "sm"), ("sx", "sx"), ("sy", "sx")]:
        Wm, Vm = operator_matrix(W, N), operator_matrix(V, N)
        ref = np.real(psi @ Wm.conj().T @ Vm.conj().T @ Wm @ Vm @ psi)
        F = microcanonical_otoc(OtocRequest(params, (EVEN, 5), W, V, [0.0]), spec).f_values[0]
        assert F == pytest.approx(ref, abs=1e-12)


@settings(max_examples=15)
@given(st.integers(2, 20).map(lambda k: 2 * k), st.floats(0, 1), st.floats(-1, 0.5), st.data())
def test_commutator_decomposition(N, xi, alpha, data):
    params = ModelParams(N, xi, alpha)
    W = data.draw(st.sampled_from(["sp", "sx", "sy", "sz"]))
    V = data.draw(st.sampled_from(["sm", "sx", "sz"]))
    j = data.draw(st.integers(0, N // 2 - 1))
    times = np.linspace(0, 40, 33)
    res = squared_commutator(OtocRequest(params, (ODD, j), W, V, times))
    assert np.all(np.isfinite(res.f_values))
    assert np.max(np.abs(res.c_values - (res.a_values - 2 * res.f_values))) <= 1e-10
    assert res.c_values.min() >= -1e-12


def test_unitary_operators():
    N = 24
    params = ModelParams(N, 0.6, -0.6)
    P = parity_matrix(N)
    res = squared_commutator(OtocRequest(params, (EVEN, 3), P, P, np.linspace(0, 20, 41)))
    np.testing.assert_allclose(res.c_values, 2 - 2 * res.f_values, atol=1e-12)
    # the parity operator commutes with H, so W(t) = W and C vanishes
    np.testing.assert_allclose(res.c_values, 0.0, atol=1e-12)

    # a unitary that does not commute with H: exp(i pi Sx / 2) rotates Sz
    from scipy.linalg import expm

    sz, sp, sm = spin_matrices(N)
    U = expm(1j * np.pi / 2 * (sp + sm) / 2)
    res = squared_commutator(OtocRequest(params, (EVEN, 3), U, U, np.linspace(0, 20, 41)))
    np.testing.assert_allclose(res.c_values, 2 - 2 * res.f_values, atol=1e-10)
    assert res.c_values.max() > 1e-3


def test_diagonal_operators_are_static():
    N = 40
    params = ModelParams(N, 0.5, -0.6)
    spec = diagonalize(params)
    req = OtocRequest(params, (EVEN, 7), "sz", "sz", np.linspace(0, 50, 200))
    res = squared_commutator(req, spec)
    # Sz does not commute with H, but W = V makes W(t) V |n> and V W(t) |n> agree at t = 0
    assert res.c_values[0] == pytest.approx(0.0, abs=1e-12)

    # operators diagonal in the eigenbasis generate no phases at all
    D = spec.vectors @ np.diag(spec.energies / N) @ spec.vectors.T
    res = microcanonical_otoc(OtocRequest(params, (EVEN, 7), D, D, np.linspace(0, 50, 200)), spec)
    np.testing.assert_allclose(res.f_values, res.f_values[0], atol=1e-12)
    steady = steady_state_otoc(OtocRequest(params, (EVEN, 7), D, D), method="analytic", spec=spec)
    assert steady == pytest.approx(res.f_values[0], abs=1e-12)

    # at xi = 0 the u(1) basis is the eigenbasis and Sz/S itself is diagonal
    flat = ModelParams(N, 0.0, -0.6)
    req = OtocRequest(flat, (EVEN, 7), "sz", "sz", np.linspace(0, 50, 200))
    res = microcanonical_otoc(req)
    np.testing.assert_allclose(res.f_values, res.f_values[0], atol=1e-12)
    assert steady_state_otoc(req, method="analytic") == pytest.approx(res.f_values[0], abs=1e-12)
    assert steady_state_otoc(req, 1e3, 1000) == pytest.approx(res.f_values[0], abs=1e-12)


def test_batched_grid_matches_pointwise_contraction():
    N = 60
    spec = diagonalize(ModelParams(N, 0.5, -0.6))
    pair = EigenbasisPair(spec, "sp", "sm")
    n = spec.global_index(EVEN, 12)
    times = np.linspace(0, 300, 5000)  # spans several chunks
    _, F, _, _ = pair.series(n, times)
    pointwise = np.array([pair.series(n, [t])[1][0] for t in times[::97]])
    assert np.max(np.abs(F[::97] - pointwise)) <= 1e-12


# configurations without near-degenerate doublets, where a finite horizon resolves every frequency
STEADY_CASES = [
    (20, 0.1, 0.5, "sp", "sm"),
    (20, 0.1, 0.5, "sx", "sx"),
    (20, 0.1, 0.5, "sy", "sx"),
    (40, 0.1, 0.5, "sp", "sm"),
    (20, 0.1, -0.6, "sx", "sx"),
]


@pytest.mark.parametrize("N, xi, alpha, W, V", STEADY_CASES)
def test_numeric_steady_state_matches_zero_frequency_sum(N, xi, alpha, W, V):
    params = ModelParams(N, xi, alpha)
    spec = diagonalize(params)
    pair = EigenbasisPair(spec, W, V)
    for parity in (EVEN, ODD):
        for j in range(len(spec.sector(parity))):
            req = OtocRequest(params, (parity, j), W, V)
            numeric = steady_state_otoc(req, 1e4, 100_000, "numeric", pair=pair)
            analytic = steady_state_otoc(req, method="analytic", pair=pair)
            assert abs(numeric - analytic) <= 5e-3


def test_near_degenerate_doublets_break_the_finite_horizon_average():
    # doublet splittings far below 1/T leave a slow beat that the T = 1e4 window cannot average
    params = ModelParams(20, 0.3, -0.6)
    spec = diagonalize(params)
    pair = EigenbasisPair(spec, "sp", "sm")
    gaps = [abs(spec.energies[i + 1] - spec.energies[i]) for i in range(spec.dim - 1)]
    assert min(gaps) < 1e-4
    worst = 0.0
    for j in range(len(spec.sector(EVEN))):
        req = OtocRequest(params, (EVEN, j))
        worst = max(worst, abs(steady_state_otoc(req, pair=pair) - steady_state_otoc(req, method="analytic", pair=pair)))
    assert worst > 5e-3


def test_steady_state_argument_checks():
    req = OtocRequest(ModelParams(10, 0.5, 0.0))
    with pytest.raises(InvalidInput):
        steady_state_otoc(req, horizon=0.0)
    with pytest.raises(InvalidInput):
        steady_state_otoc(req, samples=999)
    with pytest.raises(InvalidInput):
        steady_state_otoc(req, method="fourier")


def test_request_validation():
    params = ModelParams(10, 0.5, 0.0)
    with pytest.raises(InvalidInput):
        OtocRequest(params, (EVEN, 0), "sq", "sm")
    with pytest.raises(InvalidInput):
        microcanonical_otoc(OtocRequest(params, (EVEN, 6)))
    with pytest.raises(InvalidInput):
        microcanonical_otoc(OtocRequest(params, (EVEN, 0), np.eye(5), np.eye(11)))
    with pytest.raises(InvalidInput):
        microcanonical_otoc(OtocRequest(params, (EVEN, 0), times=[]))


def test_profile_matches_per_state_values():
    params = ModelParams(40, 0.5, -0.6)
    spec = diagonalize(params)
    prof = steady_state_profile(params, spec=spec)
    pair = EigenbasisPair(spec, "sp", "sm")
    assert len(prof.f_bar) == 21
    for j in (0, 7, 20):
        assert prof.f_bar[j] == steady_state_otoc(OtocRequest(params, (EVEN, j)), method="analytic", pair=pair)
    np.testing.assert_array_equal(prof.energy_per_site, spec.energy_per_site[spec.sector(EVEN)])


def test_sx_pair_is_blind_above_first_line():
    params = ModelParams(200, 0.5, -0.6)
    prof = steady_state_profile(params, "sx", "sx")
    above = prof.energy_per_site > 0.55
    below = prof.energy_per_site < 0.35
    assert np.max(np.abs(prof.f_bar[above])) <= 1e-10
    assert np.median(np.abs(prof.f_bar[below])) > 1e-2
