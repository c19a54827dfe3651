import math

import numpy as np
import pytest

from conftest import random_density
from oracles import entropy
from qde.dynamics import Evolver
from qde.errors import DomainError, ValidationError
from qde.hamiltonian import ising, onsite, xy
from qde.operators import Window, partial_trace_matrix
from qde.states import (
    ChainState,
    binary_entropy,
    gibbs_state,
    invariance_check,
    make_state,
    mean_entropy,
    mean_entropy_family,
    product_state,
    tracial_state,
    trace_norm,
    von_neumann_entropy,
)

P = np.diag([0.75, 0.25])
H34 = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))


def test_entropy_examples():
    psi = np.array([1, 1j]) / math.sqrt(2)
    assert von_neumann_entropy(np.outer(psi, psi.conj())) == pytest.approx(0.0, abs=1e-14)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-15)
    assert von_neumann_entropy(P) == pytest.approx(H34, abs=1e-15)
    assert H34 == pytest.approx(0.5623, abs=1e-4)


def test_entropy_trace_validation():
    with pytest.raises(ValidationError):
        von_neumann_entropy(np.eye(2) * 0.6)


def test_entropy_matches_oracle_and_bounds(rng):
    for dim in (2, 4, 8):
        rho = random_density(rng, dim)
        s = von_neumann_entropy(rho)
        assert s == pytest.approx(entropy(rho), abs=1e-12)
        assert 0 <= s <= math.log(dim) + 1e-12


def test_tracial_state():
    st = tracial_state(Window(0, 2))
    assert np.allclose(st.rho, np.eye(8) / 8)
    assert von_neumann_entropy(st) == pytest.approx(3 * math.log(2), abs=1e-12)


def test_gibbs_beta_zero_is_tracial():
    st = gibbs_state(ising(), Window(0, 2), 0.0, "periodic")
    assert trace_norm(st.rho - np.eye(8) / 8) <= 1e-14


def test_gibbs_single_site():
    st = gibbs_state(onsite(1.0, "z"), Window(0, 0), 1.0, "open")
    ref = np.diag([math.exp(-1), math.exp(1)]) / (math.e + math.exp(-1))
    assert np.allclose(st.rho, ref, atol=1e-14)


def test_gibbs_small_beta_near_tracial():
    st = gibbs_state(xy(1.0, 0.3), Window(0, 3), 1e-6, "periodic")
    assert trace_norm(st.rho - np.eye(16) / 16) <= 1e-4


def test_product_state_validation():
    with pytest.raises(ValidationError):
        product_state(np.diag([1.2, -0.2]), Window(0, 1))
    with pytest.raises(ValidationError):
        product_state(np.array([[0.5, 0.1], [0.2, 0.5]]), Window(0, 1))


def test_chain_state_validation():
    with pytest.raises(ValidationError):
        ChainState(Window(0, 0), np.diag([0.5, 0.6]))
    with pytest.raises(DomainError):
        ChainState(Window(0, 1), np.eye(2) / 2)


def test_make_state_factory():
    w = Window(0, 1)
    assert make_state("tracial", None, w).is_tracial
    assert make_state("product", None, w, rho_site=P).kind == "product"
    assert make_state("gibbs", ising(), w, beta=0.5, boundary="open").kind == "gibbs"
    with pytest.raises(DomainError):
        make_state("thermal", ising(), w)


def test_mean_entropy_families():
    rep = mean_entropy_family("tracial", None, [1, 2, 4])
    assert all(v == pytest.approx(math.log(2), abs=1e-12) for v in rep.per_site)
    rep = mean_entropy_family("product", None, [1, 2, 3, 5], rho_site=P)
    assert all(abs(v - H34) <= 1e-12 for v in rep.per_site)
    rep = mean_entropy_family("product", None, [1, 3], rho_site=np.diag([1.0, 0.0]))
    assert rep.per_site == [0.0, 0.0]
    with pytest.raises(DomainError):
        mean_entropy([tracial_state(Window(0, 0))])


def test_gibbs_mean_entropy_bounds():
    rep = mean_entropy_family("gibbs", ising(), [2, 3, 4, 5], beta=0.7, boundary="periodic")
    for n, s in zip(rep.sizes, rep.entropies):
        assert 0 <= s <= n * math.log(2) + 1e-12


def test_subadditivity(rng):
    for _ in range(10):
        rho = random_density(rng, 4)
        ra = partial_trace_matrix(rho, [0], 2, 2)
        rb = partial_trace_matrix(rho, [1], 2, 2)
        assert von_neumann_entropy(rho) <= von_neumann_entropy(ra) + von_neumann_entropy(rb) + 1e-12


def test_reduce_product_state():
    st = product_state(P, Window(0, 2))
    red = st.reduce(Window(1, 1))
    assert np.allclose(red.rho, P)


def test_invariance_tracial_and_gibbs():
    w = Window(0, 3)
    ev = Evolver.from_potential(ising(0.6, 1.0), w, "periodic")
    rep = invariance_check(tracial_state(w), ev, 1, 0.9)
    assert rep.time_deviation == 0 and rep.translation_deviation == 0 and rep.passed
    g = gibbs_state(ising(0.6, 1.0), w, 0.8, "periodic")
    rep = invariance_check(g, ev, 1, 0.9)
    assert rep.time_deviation <= 1e-10 and rep.translation_deviation <= 1e-10


def test_invariance_flags_noncommuting_product():
    w = Window(0, 1)
    ev = Evolver.from_potential(ising(), w)
    rep = invariance_check(product_state(P, w), ev, 1, 0.5)
    assert rep.time_deviation > 1e-3 and not rep.passed


def test_binary_entropy():
    assert binary_entropy(0.25) == pytest.approx(H34)
    assert binary_entropy(0.0) == 0.0
