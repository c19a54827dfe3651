import math

import numpy as np
import pytest

from oracles import embed_site_ops, ising_dense
from qde.errors import DomainError, ValidationError
from qde.hamiltonian import (
    Potential,
    Term,
    empty,
    group_velocity,
    heisenberg,
    ising,
    lambda_norm,
    local_hamiltonian,
    onsite,
    xy,
)
from qde.operators import PAULI, QUBIT, LocalOperator, Window, roll_sites


def test_lambda_norm_ising():
    phi = ising(1.0, 1.0)
    for lam in (0.01, 0.5, 1.0, 3.0):
        assert lambda_norm(phi, lam).value == pytest.approx(32 * math.exp(lam), rel=1e-14)


def test_lambda_norm_onsite_constant():
    phi = onsite(-1.5, "z")
    assert lambda_norm(phi, 0.1).value == pytest.approx(6.0)
    assert lambda_norm(phi, 7.0).value == pytest.approx(6.0)


def test_lambda_norm_empty_and_domain():
    assert lambda_norm(empty(), 1.0).value == 0.0
    with pytest.raises(DomainError):
        lambda_norm(ising(), 0.0)


def test_lambda_norm_monotone_and_adding_terms():
    phi = xy(1.0, 0.3, 0.7)
    grid = np.linspace(0.01, 5, 60)
    vals = [lambda_norm(phi, l).value for l in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    extra = phi.with_term(Term.on_support(0.1 * np.kron(PAULI["z"], PAULI["z"]), (0, 2)))
    assert all(lambda_norm(extra, l).value >= v for l, v in zip(grid, vals))


@pytest.mark.parametrize("J", [0.2, 1.0, 3.7])
def test_group_velocity_calculus_oracle(J):
    phi = Potential(QUBIT, (Term.on_support(J * np.kron(PAULI["z"], PAULI["z"]), (0, 1)),))
    c = 32 * J
    v = group_velocity(phi)
    assert v.lambda_star == pytest.approx(1.0, abs=1e-8)
    assert v.value == pytest.approx(c * math.e, rel=1e-12)


def test_group_velocity_ising_and_certificate():
    v = group_velocity(ising())
    assert v.value == pytest.approx(32 * math.e, rel=1e-12)
    rep = v.method_report
    assert rep["grid_certificate"]
    assert np.all(v.value <= np.asarray(rep["grid_values"]) + 1e-12)


def test_group_velocity_onsite_and_empty():
    v = group_velocity(onsite(2.0))
    assert v.value == 0.0 and v.lambda_star == math.inf
    with pytest.raises(DomainError):
        group_velocity(empty())


def test_local_hamiltonian_two_site_ising():
    h, J = 0.7, -1.3
    H = local_hamiltonian(ising(h, J), Window(0, 1)).matrix
    x, z = PAULI["x"], PAULI["z"]
    ref = h * (np.kron(x, np.eye(2)) + np.kron(np.eye(2), x)) + J * np.kron(z, z)
    assert np.allclose(H, ref, atol=1e-15)


def test_local_hamiltonian_matches_dense_oracle():
    for n in (1, 3, 5):
        H = local_hamiltonian(ising(), Window(2, 1 + n)).matrix
        assert np.allclose(H, ising_dense(n), atol=1e-13)


def test_local_hamiltonian_empty_is_zero():
    assert not np.any(local_hamiltonian(empty(), Window(0, 2)).matrix)


def test_short_open_window_drops_long_terms():
    H = local_hamiltonian(ising(0.0, 1.0), Window(0, 0)).matrix
    assert not np.any(H)


def test_onsite_spectrum_is_kronecker_sum():
    c = 0.8
    H = local_hamiltonian(onsite(c, "x"), Window(0, 2)).matrix
    e = np.sort(np.linalg.eigvalsh(H))
    single = np.array([-c, c])
    ref = np.sort((single[:, None, None] + single[None, :, None] + single[None, None, :]).ravel())
    assert np.allclose(e, ref, atol=1e-12)


def test_periodic_translation_covariance():
    for phi in (ising(0.4, 1.1), heisenberg(1.0, 0.3), xy(1.0, 0.5, 0.2)):
        H = local_hamiltonian(phi, Window(0, 4), "periodic").matrix
        assert np.max(np.abs(H - H.conj().T)) <= 1e-12
        assert np.allclose(roll_sites(H, 1, 5, 2), H, atol=1e-13)


def test_periodic_wraps():
    H = local_hamiltonian(ising(0.0, 1.0), Window(0, 2), "periodic").matrix
    z = PAULI["z"]
    ref = sum(embed_site_ops(np.kron(z, z), i, 3) for i in range(2)) + embed_site_ops(z, 0, 3) @ embed_site_ops(z, 2, 3)
    assert np.allclose(H, ref)


def test_periodic_too_small():
    with pytest.raises(DomainError):
        local_hamiltonian(ising(), Window(0, 0), "periodic")


def test_term_validation():
    with pytest.raises(ValidationError):
        Term.on_support(np.array([[0, 1], [0, 0]]), (0,))
    # claims support (0, 2) but acts on offset 1
    bad = LocalOperator(Window(0, 2), np.kron(np.kron(PAULI["z"], PAULI["z"]), PAULI["z"]), QUBIT)
    with pytest.raises(ValidationError):
        Term((0, 2), bad)
    good = Term.on_support(np.kron(PAULI["z"], PAULI["z"]), (0, 2))
    assert good.diameter == 2 and good.cardinality == 2


def test_duplicate_supports_rejected():
    t = Term.on_support(PAULI["z"], (0,))
    with pytest.raises(ValidationError):
        Potential(QUBIT, (t, t))
