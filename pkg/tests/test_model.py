import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from almg import InvalidInput, ModelParams, build_block_hamiltonian, build_full_operator, dense_hamiltonian
from almg.model import EVEN, ODD, SpinOperator, mz_values, parity_diagonal, parity_of_state, sector_indices

from oracles import dense_hamiltonian as oracle_hamiltonian
from oracles import parity_matrix, spin_matrices

even_N = st.integers(1, 32).map(lambda k: 2 * k)
unit = st.floats(0.0, 1.0)
alphas = st.floats(-1.5, 1.5)


def test_xi_zero_block_is_diagonal_occupation():
    block = build_block_hamiltonian(ModelParams(2, 0.0, 0.0), "even")
    np.testing.assert_array_equal(block.diag, [0.0, 2.0])
    np.testing.assert_array_equal(block.offdiag, [0.0])


def test_small_block_by_hand():
    # S = 1, Mz in {-1, +1}: diag 0.5, 1.5 and coupling -(2 xi/S)(1/4)<1|S+^2|-1> = -0.5
    block = build_block_hamiltonian(ModelParams(2, 0.5, 0.0), "even")
    np.testing.assert_allclose(block.diag, [0.5, 1.5], atol=1e-15)
    np.testing.assert_allclose(block.offdiag, [-0.5], atol=1e-15)
    H = oracle_hamiltonian(2, 0.5, 0.0)
    np.testing.assert_allclose(block.dense(), H[np.ix_([0, 2], [0, 2])], atol=1e-14)


def test_odd_sector_of_n2_is_single_state():
    block = build_block_hamiltonian(ModelParams(2, 0.5, -0.6), ODD)
    assert block.dim == 1 and block.offdiag.size == 0


def test_block_dimensions():
    N = 300
    assert build_block_hamiltonian(ModelParams(N, 0.6, -0.6), EVEN).dim == N // 2 + 1
    assert build_block_hamiltonian(ModelParams(N, 0.6, -0.6), ODD).dim == N // 2
    np.testing.assert_array_equal(np.diff(mz_values(N)[sector_indices(N, EVEN)]), 2)


@pytest.mark.parametrize("N", [3, 0, -2, 7])
def test_invalid_N(N):
    with pytest.raises(InvalidInput):
        ModelParams(N, 0.5, 0.0)


@pytest.mark.parametrize("xi", [-0.01, 1.5, float("nan")])
def test_invalid_xi(xi):
    with pytest.raises(InvalidInput):
        ModelParams(10, xi, 0.0)


def test_invalid_alpha():
    with pytest.raises(InvalidInput):
        ModelParams(10, 0.5, float("inf"))


@given(even_N.filter(lambda n: n <= 64), unit, alphas)
def test_blocks_reassemble_dense_oracle(N, xi, alpha):
    H = dense_hamiltonian(ModelParams(N, xi, alpha))
    ref = oracle_hamiltonian(N, xi, alpha)
    assert np.max(np.abs(H - ref)) <= 1e-12 * max(1.0, np.abs(ref).max())


@given(even_N, unit, alphas)
def test_dense_hamiltonian_symmetric_and_parity_conserving(N, xi, alpha):
    H = dense_hamiltonian(ModelParams(N, xi, alpha))
    assert np.max(np.abs(H - H.T)) <= 1e-15
    P = parity_matrix(N)
    assert np.max(np.abs(H @ P - P @ H)) <= 1e-12


@given(even_N, alphas)
def test_xi_zero_spectrum_is_anharmonic_ladder(N, alpha):
    H = dense_hamiltonian(ModelParams(N, 0.0, alpha))
    n = np.arange(N + 1)
    np.testing.assert_allclose(np.diag(H), n + alpha / N * n * (n + 1), rtol=0, atol=1e-12)
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


def test_so2_limit_parity_doublets():
    from scipy.linalg import eigvalsh_tridiagonal

    params = ModelParams(300, 1.0, 0.0)
    even = build_block_hamiltonian(params, EVEN)
    odd = build_block_hamiltonian(params, ODD)
    e_even = eigvalsh_tridiagonal(even.diag, even.offdiag)
    e_odd = eigvalsh_tridiagonal(odd.diag, odd.offdiag)
    # lowest 40 levels pair up across parity
    gaps = np.abs(e_even[:40] - e_odd[:40])
    assert gaps.max() <= 1e-8


# --- operators ---------------------------------------------------------------


def test_sz_n2():
    np.testing.assert_array_equal(build_full_operator("sz", 2).real, np.diag([-1.0, 0.0, 1.0]))


def test_sp_n2():
    sp = build_full_operator(SpinOperator.Sp, 2).real
    np.testing.assert_allclose(np.diag(sp, -1), [np.sqrt(2), np.sqrt(2)])
    assert np.count_nonzero(sp) == 2


def test_sx2_matches_square_of_sx():
    N = 300
    sx = build_full_operator("sx", N).real
    sx2 = build_full_operator("sx2", N).real
    assert np.max(np.abs(sx2 - sx @ sx)) <= 1e-12 * np.abs(sx2).max()


@pytest.mark.parametrize("N", [2, 8, 40])
def test_ladder_operators_match_oracle(N):
    sz, sp, sm = spin_matrices(N)
    np.testing.assert_allclose(build_full_operator("sz", N).real, sz, atol=1e-13)
    np.testing.assert_allclose(build_full_operator("sp", N).real, sp, atol=1e-12)
    np.testing.assert_allclose(build_full_operator("sm", N).real, sm, atol=1e-12)


@pytest.mark.parametrize("N", [2, 10, 30])
def test_sy_carries_imaginary_unit(N):
    op = build_full_operator("sy", N)
    assert op.imaginary
    np.testing.assert_allclose(op.real, -op.real.T)
    sx = build_full_operator("sx", N).dense()
    sy = op.dense()
    sz = build_full_operator("sz", N).dense()
    np.testing.assert_allclose(sx @ sy - sy @ sx, 1j * sz, atol=1e-11)
    _, sp, sm = spin_matrices(N)
    np.testing.assert_allclose(sy, (sp - sm) / 2j, atol=1e-12)


def test_number_operators():
    N = 12
    n = np.arange(N + 1)
    np.testing.assert_array_equal(np.diag(build_full_operator("n", N).real), n)
    np.testing.assert_array_equal(np.diag(build_full_operator("nsq", N).real), n * (n + 1))


def test_normalized_divides_by_S():
    N = 20
    np.testing.assert_allclose(build_full_operator("sx", N, normalized=True).real, build_full_operator("sx", N).real / 10)


@pytest.mark.parametrize("kind", list(SpinOperator))
def test_operator_parity_classes(kind):
    N = 16
    P = parity_diagonal(N)
    M = build_full_operator(kind, N).real
    parity_flip = P[:, None] * P[None, :] < 0
    if kind.parity_odd:
        assert np.all(M[~parity_flip] == 0)
    else:
        assert np.all(M[parity_flip] == 0)


def test_unknown_operator():
    with pytest.raises(InvalidInput):
        build_full_operator("sw", 4)


# --- parity -----------------------------------------------------------------


@pytest.mark.parametrize("mz, expected", [(-150, 1), (-149, -1), (150, 1)])
def test_parity_of_state(mz, expected):
    assert parity_of_state(mz, 300) == expected


@pytest.mark.parametrize("mz", [151, -151, 0.5])
def test_parity_of_state_out_of_range(mz):
    with pytest.raises(InvalidInput):
        parity_of_state(mz, 300)


@given(even_N, st.data())
def test_parity_of_state_matches_sector_split(N, data):
    mz = data.draw(st.integers(-N // 2, N // 2))
    n = mz + N // 2
    expected = EVEN if n in sector_indices(N, EVEN) else ODD
    assert parity_of_state(mz, N) == expected
