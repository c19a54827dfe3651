import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_operator
from qde.errors import ContainmentError, IncompatibleError
from qde.operators import (
    PAULI,
    LocalOperator,
    SiteSpec,
    Window,
    adjoint,
    allclose,
    commutator,
    conditional_expectation,
    cyclic_shift,
    embed,
    identity,
    mul,
    operator_norm,
    partial_trace,
    pauli,
    product_operator,
    translate,
)


def test_window_basics():
    w = Window(-2, 3)
    assert w.size == 6
    assert list(w.sites()) == [-2, -1, 0, 1, 2, 3]
    assert Window.centered(2) == Window(-2, 2)
    assert w.contains(Window(0, 1)) and not w.contains(Window(3, 4))
    with pytest.raises(ValueError):
        Window(1, 0)


def test_embed_identity():
    e = embed(identity(Window(0, 0)), Window(-1, 1))
    assert np.array_equal(e.matrix, np.eye(8))


def test_embed_sigma_z_basis_order():
    e = embed(pauli("z", 0), Window(0, 1))
    assert np.array_equal(e.matrix, np.diag([1, 1, -1, -1]).astype(complex))
    e = embed(pauli("z", 1), Window(0, 1))
    assert np.array_equal(e.matrix, np.diag([1, -1, 1, -1]).astype(complex))


def test_embed_consistency(rng):
    a = random_operator(rng, Window(0, 0))
    two = embed(embed(a, Window(0, 1)), Window(0, 2))
    assert allclose(two, embed(a, Window(0, 2)), atol=0)


def test_embed_requires_containment(rng):
    with pytest.raises(ContainmentError):
        embed(random_operator(rng, Window(0, 1)), Window(1, 3))


def test_embed_preserves_norm(rng):
    a = random_operator(rng, Window(1, 2))
    assert operator_norm(embed(a, Window(-1, 3))) == pytest.approx(operator_norm(a), rel=1e-12)


def test_translate():
    a = pauli("x", 0)
    b = translate(a, 3)
    assert b.window == Window(3, 3)
    assert np.array_equal(b.matrix, a.matrix)
    assert allclose(translate(translate(a, 1), -1), a, atol=0)
    assert translate(translate(a, 2), 5).window == translate(a, 7).window


def test_disjoint_supports_commute(rng):
    a = random_operator(rng, Window(0, 0))
    b = random_operator(rng, Window(0, 0))
    c = commutator(translate(a, 5), b)
    assert operator_norm(c) == 0.0


def test_commutator_paulis():
    c = commutator(pauli("z"), pauli("x"))
    assert np.allclose(c.matrix, 2j * PAULI["y"], atol=1e-15)


def test_commutator_self_and_adjoint_involution(rng):
    a = random_operator(rng, Window(0, 1))
    assert operator_norm(commutator(a, a)) == 0.0
    assert allclose(adjoint(adjoint(a)), a, atol=0)


def test_binary_ops_embed_to_union(rng):
    a = random_operator(rng, Window(0, 0))
    b = random_operator(rng, Window(2, 2))
    p = mul(a, b)
    assert p.window == Window(0, 2)
    assert np.allclose(p.matrix, np.kron(np.kron(a.matrix, np.eye(2)), b.matrix))


def test_incompatible_specs():
    a = LocalOperator(Window(0, 0), np.eye(3), SiteSpec(3))
    with pytest.raises(IncompatibleError):
        mul(a, pauli("z"))


def test_operator_norm_examples():
    assert operator_norm(identity(Window(0, 2))) == pytest.approx(1.0, abs=1e-15)
    assert operator_norm(product_operator([PAULI["z"], PAULI["z"]])) == pytest.approx(1.0, abs=1e-15)


def test_operator_norm_matches_svd(rng):
    for n in (1, 2, 3):
        a = random_operator(rng, Window(0, n - 1))
        top = np.linalg.svd(a.matrix, compute_uv=False)[0]
        assert operator_norm(a) == pytest.approx(top, rel=1e-10)
        assert operator_norm((2.5 - 1j) * a) == pytest.approx(abs(2.5 - 1j) * top, rel=1e-10)


def test_cstar_identity(rng):
    for n in (1, 2, 3):
        a = random_operator(rng, Window(0, n - 1))
        assert operator_norm(mul(adjoint(a), a)) == pytest.approx(operator_norm(a) ** 2, rel=1e-9)


def test_embedding_is_star_homomorphism(rng):
    a, b = random_operator(rng, Window(0, 1)), random_operator(rng, Window(0, 1))
    big = Window(-1, 2)
    assert allclose(embed(mul(a, b), big), mul(embed(a, big), embed(b, big)), atol=1e-12)
    assert allclose(embed(adjoint(a), big), adjoint(embed(a, big)), atol=0)


def test_conditional_expectation_product_case(rng):
    a = random_operator(rng, Window(0, 0))
    b = random_operator(rng, Window(1, 1))
    ab = mul(a, b)
    e = conditional_expectation(ab, Window(0, 0))
    assert e.window == Window(0, 0)
    assert np.allclose(e.matrix, a.matrix * np.trace(b.matrix) / 2, atol=1e-12)
    assert allclose(conditional_expectation(identity(Window(0, 2)), Window(1, 1)), identity(Window(1, 1)))


def test_conditional_expectation_is_norm_one_projection(rng):
    a = random_operator(rng, Window(0, 2))
    keep = Window(1, 1)
    e = conditional_expectation(a, keep)
    assert allclose(conditional_expectation(e, keep), e, atol=1e-12)
    assert operator_norm(e) <= operator_norm(a) * (1 + 1e-12)


def test_partial_trace_trace_preserving(rng):
    a = random_operator(rng, Window(0, 2))
    p = partial_trace(a, Window(2, 2))
    assert np.trace(p.matrix) == pytest.approx(np.trace(a.matrix), abs=1e-10)


def test_cyclic_shift_translation_of_product():
    a = product_operator([PAULI["x"], PAULI["i"], PAULI["z"]])
    s = cyclic_shift(a, 1)
    assert np.allclose(s.matrix, product_operator([PAULI["z"], PAULI["x"], PAULI["i"]]).matrix)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), x=st.integers(-20, 20))
def test_translation_covariance_of_norm(seed, x):
    a = random_operator(np.random.default_rng(seed), Window(0, 1))
    assert operator_norm(translate(a, x)) == operator_norm(a)
