"""Translation-invariant finite-range potentials and what is computed from them.

A :class:`Potential` is a list of anchored :class:`Term` objects.  Each term
is the interaction ``Phi(X)`` for one translation class of finite subsets: the
representative ``X`` has ``min(X) = 0`` and the operator lives on the window
``[0, max(X)]``, acting as the identity on sites of that window outside ``X``.
Translation invariance is structural, ``Phi(X + x) = tau_x(Phi(X))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .minimize import grid_then_golden
from .operators import (
    PAULI,
    QUBIT,
    LocalOperator,
    SiteSpec,
    Window,
    _hermitian_residual,
    _maxabs,
    check_dim,
    matrix_norm,
    partial_trace_matrix,
    place,
    zero,
)

LAMBDA_BRACKET = (1e-3, 50.0)
LAMBDA_GRID_POINTS = 400


@dataclass(frozen=True, eq=False)
class Term:
    support: tuple
    operator: LocalOperator

    def __post_init__(self):
        support = tuple(sorted(int(s) for s in self.support))
        object.__setattr__(self, "support", support)
        if not support or support[0] != 0 or len(set(support)) != len(support):
            raise DomainError(f"support {support} must be distinct offsets starting at 0")
        r = support[-1]
        if self.operator.window != Window(0, r):
            raise DomainError(f"term operator must live on [0,{r}], got {self.operator.window}")
        m = self.operator.matrix
        if _hermitian_residual(m) > 1e-12:
            raise ValidationError(f"term on {support} is not Hermitian")
        d = self.operator.local_dim
        n = r + 1
        for s in range(n):
            if s in support:
                continue
            keep = [p for p in range(n) if p != s]
            reduced = partial_trace_matrix(m, keep, n, d) / d
            rebuilt = _insert_identity(reduced, s, n, d)
            if _maxabs(rebuilt - m) > 1e-12 * max(1.0, _maxabs(m)):
                raise ValidationError(f"term declared on {support} acts nontrivially on offset {s}")

    @classmethod
    def on_support(cls, matrix, support: Sequence[int], site_spec: SiteSpec = QUBIT) -> "Term":
        """Build a term from a matrix on ``len(support)`` sites, factors in support order."""
        support = tuple(sorted(support))
        r = support[-1]
        full = place(np.asarray(matrix), list(support), r + 1, site_spec.local_dim)
        return cls(support, LocalOperator(Window(0, r), full, site_spec))

    @property
    def diameter(self) -> int:
        return self.support[-1]

    @property
    def cardinality(self) -> int:
        return len(self.support)

    @property
    def norm(self) -> float:
        return matrix_norm(self.operator.matrix)


def _insert_identity(matrix: np.ndarray, position: int, n_sites: int, d: int) -> np.ndarray:
    positions = [p for p in range(n_sites) if p != position]
    return place(matrix, positions, n_sites, d)


@dataclass(frozen=True, eq=False)
class Potential:
    site_spec: SiteSpec
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        seen = set()
        for t in terms:
            if t.operator.site_spec != self.site_spec:
                raise ValidationError("term site space differs from the potential's")
            if t.support in seen:
                raise ValidationError(f"duplicate support {t.support}; combine those terms into one")
            seen.add(t.support)

    @property
    def range(self) -> int:
        return max((t.diameter for t in self.terms), default=0)

    @property
    def local_dim(self) -> int:
        return self.site_spec.local_dim

    def with_term(self, term: Term) -> "Potential":
        return Potential(self.site_spec, self.terms + (term,))

    def weights(self) -> np.ndarray:
        """``|X| d^(2|X|) ||Phi(X)||`` per term, the lambda-independent part of the norm."""
        d = self.local_dim
        return np.array([t.cardinality * float(d) ** (2 * t.cardinality) * t.norm for t in self.terms])

    def diameters(self) -> np.ndarray:
        return np.array([t.diameter for t in self.terms], dtype=float)


# -------------------------------------------------------------- lambda norm

@dataclass(frozen=True)
class LambdaNorm:
    lam: float
    value: float


def lambda_norm(phi: Potential, lam: float) -> LambdaNorm:
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not phi.terms:
        return LambdaNorm(lam, 0.0)
    vals = phi.weights() * np.exp(lam * phi.diameters())
    return LambdaNorm(lam, float(np.max(vals)))


@dataclass
class GroupVelocity:
    value: float
    lambda_star: float
    method_report: dict = field(default_factory=dict)


def group_velocity(
    phi: Potential,
    bracket: tuple = LAMBDA_BRACKET,
    points: int = LAMBDA_GRID_POINTS,
) -> GroupVelocity:
    """Infimum over lambda of ``||Phi||_lambda / lambda``.

    ``f`` is a maximum of the convex functions ``w e^(lambda D) / lambda``, hence
    convex; the grid certificate is still reported so a bad bracket is visible.
    Potentials whose nonzero terms are all on-site give ``f = c / lambda`` with
    infimum 0 approached as ``lambda -> inf``.
    """
    if not phi.terms:
        raise DomainError("group velocity of an empty potential is undefined")
    w = phi.weights()
    dia = phi.diameters()
    live = w > 0
    if not np.any(live & (dia >= 1)):
        return GroupVelocity(0.0, math.inf, {"reason": "no nonzero term with diameter >= 1"})
    w, dia = w[live], dia[live]

    def f(lam):
        return float(np.max(w * np.exp(lam * dia))) / lam

    def slope(lam):
        pieces = w * np.exp(lam * dia)
        top = np.max(pieces)
        active = pieces >= top * (1 - 1e-15)
        return float(np.max(pieces[active] * (dia[active] * lam - 1.0))) / lam**2

    lo, hi = bracket
    res = grid_then_golden(f, lo, hi, points=points, slope=slope)
    report = {
        "bracket": [lo, hi],
        "grid_points": points,
        "grid_index": res.grid_index,
        "grid_lambda": float(res.grid[res.grid_index]),
        "golden_bracket": list(res.golden_bracket),
        "golden_iterations": res.golden_iterations,
        "grid_certificate": res.certificate,
        "at_bracket_edge": res.at_edge,
        "grid": res.grid,
        "grid_values": res.values,
    }
    return GroupVelocity(res.fx, res.x, report)


# --------------------------------------------------------- local hamiltonian

def local_hamiltonian(phi: Potential, window: Window, boundary: str = "open") -> LocalOperator:
    """``H = sum of Phi(X)`` over translates ``X`` inside ``window``.

    Under ``periodic`` boundary every anchor of the window is used and supports
    wrap modulo the window size.
    """
    if boundary not in ("open", "periodic"):
        raise DomainError(f"boundary must be 'open' or 'periodic', got {boundary!r}")
    n, d = window.size, phi.local_dim
    dim = check_dim(d, n)
    if boundary == "periodic" and phi.terms and n <= phi.range:
        raise DomainError(f"periodic window of {n} sites cannot hold range {phi.range}")
    if not phi.terms:
        return zero(window, phi.site_spec)
    h = np.zeros((dim, dim), dtype=np.complex128)
    for t in phi.terms:
        r = t.diameter
        m = t.operator.matrix
        if boundary == "open":
            for start in range(0, n - r):
                h += np.kron(np.kron(np.eye(d**start), m), np.eye(d ** (n - start - r - 1)))
        else:
            for start in range(n):
                positions = [(start + s) % n for s in range(r + 1)]
                h += place(m, positions, n, d)
    return LocalOperator(window, h, phi.site_spec)


# -------------------------------------------------------------------- models

def ising(h: float = 1.0, J: float = 1.0) -> Potential:
    """Transverse-field Ising chain: ``Phi({x}) = h X``, ``Phi({x,x+1}) = J Z Z``."""
    terms = []
    if h != 0:
        terms.append(Term.on_support(h * PAULI["x"], (0,)))
    if J != 0:
        terms.append(Term.on_support(J * np.kron(PAULI["z"], PAULI["z"]), (0, 1)))
    return Potential(QUBIT, tuple(terms))


def xy(J: float = 1.0, gamma: float = 0.0, h: float = 0.0) -> Potential:
    """Anisotropic XY chain ``J[(1+g) XX + (1-g) YY] + h Z``."""
    bond = J * ((1 + gamma) * np.kron(PAULI["x"], PAULI["x"]) + (1 - gamma) * np.kron(PAULI["y"], PAULI["y"]))
    terms = [Term.on_support(bond, (0, 1))]
    if h != 0:
        terms.insert(0, Term.on_support(h * PAULI["z"], (0,)))
    return Potential(QUBIT, tuple(terms))


def heisenberg(J: float = 1.0, h: float = 0.0) -> Potential:
    bond = J * sum(np.kron(PAULI[a], PAULI[a]) for a in "xyz")
    terms = [Term.on_support(bond, (0, 1))]
    if h != 0:
        terms.insert(0, Term.on_support(h * PAULI["z"], (0,)))
    return Potential(QUBIT, tuple(terms))


def onsite(c: float = 1.0, axis: str = "z") -> Potential:
    """Non-interacting chain ``Phi({x}) = c sigma^axis``."""
    return Potential(QUBIT, (Term.on_support(c * PAULI[axis], (0,)),))


def empty(site_spec: SiteSpec = QUBIT) -> Potential:
    return Potential(site_spec, ())


MODELS = {"ising": ising, "xy": xy, "heisenberg": heisenberg, "onsite": onsite}
