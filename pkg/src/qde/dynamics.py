"""Finite-volume Heisenberg dynamics and locality diagnostics.

``alpha_t^L(A) = exp(i H_L t) A exp(-i H_L t)`` is evaluated through a stored
eigendecomposition of ``H_L``.  Infinite-volume statements are replaced by
their finite-volume surrogates: the evolution on the largest window in use
plays the role of ``alpha_t`` and the distance to it is reported rather than
assumed small.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ContainmentError, DomainError, NumericalError
from .hamiltonian import LAMBDA_BRACKET, Potential, lambda_norm, local_hamiltonian
from .minimize import grid_then_golden
from .operators import (
    LocalOperator,
    Window,
    _maxabs,
    apply_left,
    apply_right,
    embed,
    matrix_norm,
    operator_norm,
)

EIG_RESIDUAL = 1e-10
PROBES = 64
ASCENT_STEPS = 20


@dataclass(frozen=True, eq=False)
class Evolver:
    hamiltonian: LocalOperator
    eigenvalues: np.ndarray = field(repr=False)
    eigenbasis: np.ndarray = field(repr=False)
    site_hamiltonian: np.ndarray | None = field(default=None, repr=False)
    _propagators: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def build(cls, hamiltonian: LocalOperator, site_hamiltonian: np.ndarray | None = None) -> "Evolver":
        """Diagonalise ``hamiltonian``.

        ``site_hamiltonian`` declares ``H`` to be the sum of one copy of it per
        site; products with ``exp(iHt)`` then factorise over sites.
        """
        h = hamiltonian.matrix
        if _maxabs(h - h.conj().T) > 1e-12 * max(1.0, _maxabs(h)):
            raise DomainError("Hamiltonian is not Hermitian")
        if not np.any(h.imag):
            e, u = np.linalg.eigh(h.real)
        else:
            e, u = np.linalg.eigh(h)
        scale = float(np.max(np.abs(e))) if e.size else 0.0
        resid = np.linalg.norm((u * e) @ u.conj().T - h)  # Frobenius >= operator norm
        if resid > EIG_RESIDUAL * max(scale, 1e-300) and resid > 0:
            raise NumericalError("eigendecomposition residual too large", {"residual": resid, "norm": scale})
        e.setflags(write=False)
        u.setflags(write=False)
        return cls(hamiltonian, e, u, site_hamiltonian)

    @classmethod
    def from_potential(cls, phi: Potential, window: Window, boundary: str = "open") -> "Evolver":
        per_phi = _EVOLVERS.setdefault(phi, {})
        key = (window, boundary)
        if key not in per_phi:
            site = None
            if phi.terms and phi.range == 0:
                site = sum(t.operator.matrix for t in phi.terms)
            per_phi[key] = cls.build(local_hamiltonian(phi, window, boundary), site)
        return per_phi[key]

    @property
    def window(self) -> Window:
        return self.hamiltonian.window

    @property
    def site_spec(self):
        return self.hamiltonian.site_spec

    def propagator(self, t: float) -> np.ndarray:
        """``exp(i H t)`` as a dense matrix; a few of these are cached."""
        t = float(t)
        if t not in self._propagators:
            if len(self._propagators) >= 4:
                self._propagators.pop(next(iter(self._propagators)))
            u = self.eigenbasis
            w = (u * np.exp(1j * t * self.eigenvalues)) @ u.conj().T
            w.setflags(write=False)
            self._propagators[t] = w
        return self._propagators[t]

    def apply(self, t: float, block: np.ndarray) -> np.ndarray:
        """``exp(i H t) @ block``, sitewise when ``H`` is a sum of on-site terms."""
        if self.site_hamiltonian is None:
            return self.propagator(t) @ block
        e, v = np.linalg.eigh(self.site_hamiltonian)
        w = (v * np.exp(1j * t * e)) @ v.conj().T
        n, d = self.window.size, self.site_spec.local_dim
        out = block
        for x in range(n):
            out = apply_left(w, out, x, n, d)
        return out


_EVOLVERS: "weakref.WeakKeyDictionary[Potential, dict]" = weakref.WeakKeyDictionary()


def evolve(ev: Evolver, a: LocalOperator, t: float) -> LocalOperator:
    if not ev.window.contains(a.window):
        raise ContainmentError(f"operator on {a.window} exceeds evolver window {ev.window}")
    if t == 0:
        return embed(a, ev.window)
    w = ev.propagator(t)
    n, d = ev.window.size, a.local_dim
    if a.window.size < n:
        wa = apply_right(w, a.matrix, a.window.lo - ev.window.lo, n, d)
    else:
        wa = w @ a.matrix
    return LocalOperator(ev.window, wa @ w.conj().T, a.site_spec)


# ------------------------------------------------------- localization profile

def _site_commutator(a: np.ndarray, b: np.ndarray, offset: int, n: int, d: int) -> np.ndarray:
    """``[a, 1 ⊗ b ⊗ 1]`` with ``b`` on one site at ``offset``."""
    return apply_right(a, b, offset, n, d) - apply_left(b, a, offset, n, d)


def _top_singular_pair(c: np.ndarray):
    if c.shape[0] <= 512:
        u, s, vh = np.linalg.svd(c)
        return u[:, 0], s[0], vh[0].conj()
    u, s, vh = spla.svds(c, k=1)
    return u[:, 0], s[0], vh[0].conj()


@dataclass
class LocalizationProfile:
    operator: LocalOperator
    values: dict  # site -> (lower, upper)

    def upper(self, x: int) -> float:
        return self.values[x][1]

    def lower(self, x: int) -> float:
        return self.values[x][0]

    def sites(self) -> list:
        return sorted(self.values)


def localization_bounds(
    a: LocalOperator,
    x: int,
    probes: int = PROBES,
    steps: int = ASCENT_STEPS,
    rng: np.random.Generator | None = None,
) -> tuple:
    """``(lower, upper)`` bracket of ``F_x(a) = sup ||[a, tau_x(b)]|| / ||b||`` over one-site ``b``.

    The upper bound sums the commutator norms over matrix units.  The lower
    bound is the best ratio found among matrix units, ``probes`` random
    operators and ``steps`` normalised gradient steps on the Frobenius sphere.
    """
    if not a.window.contains(x):
        return 0.0, 0.0
    rng = rng if rng is not None else np.random.default_rng(0)
    d, n = a.local_dim, a.window.size
    off = x - a.window.lo
    A = a.matrix

    def ratio(b):
        nb = matrix_norm(b)
        return matrix_norm(_site_commutator(A, b, off, n, d)) / nb if nb > 0 else 0.0

    upper, best, best_b = 0.0, 0.0, None
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1.0
            r = ratio(e)
            upper += r
            if r > best:
                best, best_b = r, e
    for _ in range(probes):
        b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        b /= matrix_norm(b)
        r = ratio(b)
        if r > best:
            best, best_b = r, b
    if best_b is not None and best > 0:
        b = best_b / np.linalg.norm(best_b)
        eta = 0.5
        for _ in range(steps):
            c = _site_commutator(A, b, off, n, d)
            u, s, v = _top_singular_pair(c)
            if s == 0:
                break
            # d||C||/db along Re tr(Q db); C = A b - b A, G* = v u*
            p1, q1 = v, A.conj().T @ u
            p2, q2 = A @ v, u
            q = _reduced_outer(p1, q1, off, n, d) - _reduced_outer(p2, q2, off, n, d)
            grad = q.conj().T
            gn = np.linalg.norm(grad)
            if gn == 0:
                break
            b = b + eta * grad / gn
            b /= np.linalg.norm(b)
            eta *= 0.8
            r = ratio(b)
            if r > best:
                best = r
    return float(best), float(upper)


def _reduced_outer(p: np.ndarray, q: np.ndarray, off: int, n: int, d: int) -> np.ndarray:
    """``Tr_{others} |p><q|`` for the one site at position ``off``."""
    left, right = d**off, d ** (n - off - 1)
    pp = p.reshape(left, d, right)
    qq = q.reshape(left, d, right)
    return np.einsum("iaj,ibj->ab", pp, qq.conj())


def localization_profile(
    a: LocalOperator,
    ambient: Window,
    probes: int = PROBES,
    steps: int = ASCENT_STEPS,
    seed: int = 0,
) -> LocalizationProfile:
    if not ambient.contains(a.window):
        raise ContainmentError(f"operator on {a.window} not inside ambient {ambient}")
    rng = np.random.default_rng(seed)
    values = {x: localization_bounds(a, x, probes, steps, rng) for x in ambient.sites()}
    return LocalizationProfile(a, values)


def tail_log_slope(distances: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of ``log(value)`` against distance (zeros are dropped)."""
    dist = np.asarray(distances, dtype=float)
    vals = np.asarray(values, dtype=float)
    keep = vals > 0
    if keep.sum() < 2:
        return -math.inf
    slope, _ = np.polyfit(dist[keep], np.log(vals[keep]), 1)
    return float(slope)


# ------------------------------------------------------ volume convergence

@dataclass
class ConvergenceTable:
    radii: list
    errors: list
    t: float
    r_max: int

    @property
    def monotone(self) -> bool:
        e = self.errors
        return all(e[i + 1] <= e[i] + 1e-9 for i in range(len(e) - 1))


def evolve_on_radii(phi: Potential, a: LocalOperator, t: float, radii: Sequence[int], boundary: str = "open"):
    """``alpha_t^[-R,R](a)`` for each radius, embedded into the largest window."""
    radii = list(radii)
    if any(r2 <= r1 for r1, r2 in zip(radii, radii[1:])):
        raise DomainError(f"radii must be increasing: {radii}")
    big = Window.centered(radii[-1])
    out = []
    for r in radii:
        ev = Evolver.from_potential(phi, Window.centered(r), boundary)
        out.append(embed(evolve(ev, a, t), big))
    return out


_ERRORS: "weakref.WeakKeyDictionary[Potential, dict]" = weakref.WeakKeyDictionary()


def _volume_errors(phi: Potential, a: LocalOperator, t: float, radii: Sequence[int], boundary: str) -> list:
    # errors depend only on (a, t, radii), so repeated lemma checks at other lambdas reuse them
    key = (a.window, a.matrix.tobytes(), float(t), tuple(radii), boundary)
    per_phi = _ERRORS.setdefault(phi, {})
    if key not in per_phi:
        evolved = evolve_on_radii(phi, a, t, radii, boundary)
        ref = evolved[-1].matrix
        per_phi[key] = [matrix_norm(e.matrix - ref) if i < len(evolved) - 1 else 0.0 for i, e in enumerate(evolved)]
    return list(per_phi[key])


def convergence_in_volume(
    phi: Potential, a: LocalOperator, t: float, radii: Sequence[int], boundary: str = "open"
) -> ConvergenceTable:
    errors = _volume_errors(phi, a, t, radii, boundary)
    return ConvergenceTable(list(radii), errors, float(t), int(radii[-1]))


# ------------------------------------------------------------------ finite-volume certificate

def _lemma2_constant(L: int, lam: float, local_dim: int) -> float:
    return (
        math.log(2 * math.exp(-lam) / (1 - math.exp(-lam)))
        + 4 * (2 * L + 1) * math.log(local_dim)
        + math.log(2 * L + 1)
    )


def lemma2_rhs(L: int, t: float, eps2: float, lam: float, phi: Potential) -> float:
    if not 0 < eps2 <= 1:
        raise DomainError(f"eps2 must be in (0, 1], got {eps2}")
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    norm = lambda_norm(phi, lam).value
    return L + 2 * norm * abs(t) / lam + (_lemma2_constant(L, lam, phi.local_dim) - math.log(eps2)) / lam


def lemma2_radius(L: int, t: float, eps2: float, lam: float, phi: Potential) -> int:
    """Smallest integer radius strictly above the Lemma-2 threshold."""
    return math.floor(lemma2_rhs(L, t, eps2, lam, phi)) + 1


def lemma2_certified_eps(R: int, L: int, t: float, lam: float, phi: Potential) -> float:
    """Infimum of the ``eps2`` values the radius inequality certifies at radius ``R``."""
    norm = lambda_norm(phi, lam).value
    expo = lam * (L - R) + 2 * norm * abs(t) + _lemma2_constant(L, lam, phi.local_dim)
    return math.exp(expo) if expo < 700 else math.inf


@dataclass
class Lemma2Row:
    R: int
    actual_error: float
    certified_eps: float
    vacuous: bool
    satisfied: bool


@dataclass
class Lemma2Report:
    L: int
    t: float
    lam: float
    eps2: float
    required_radius: int
    r_max: int
    operator_norm: float
    rows: list

    @property
    def ok(self) -> bool:
        return all(r.satisfied for r in self.rows)

    @property
    def all_vacuous(self) -> bool:
        return all(r.vacuous for r in self.rows)


def lemma2_check(
    phi: Potential,
    a: LocalOperator,
    t: float,
    eps2: float,
    lam: float,
    r_max: int,
    L: int | None = None,
    boundary: str = "open",
) -> Lemma2Report:
    if L is None:
        L = max(abs(a.window.lo), abs(a.window.hi))
    if not Window.centered(L).contains(a.window):
        raise ContainmentError(f"operator on {a.window} is not in [-{L},{L}]")
    radii = list(range(L, r_max + 1))
    errors = _volume_errors(phi, a, t, radii, boundary)
    anorm = operator_norm(a)
    rows = []
    for R, err in zip(radii, errors):
        ceps = lemma2_certified_eps(R, L, t, lam, phi)
        vacuous = not ceps <= 1.0
        ok = vacuous or err <= ceps * anorm + 1e-12
        rows.append(Lemma2Row(R, err, ceps, vacuous, ok))
    return Lemma2Report(L, float(t), float(lam), float(eps2), lemma2_radius(L, t, eps2, lam, phi), r_max, anorm, rows)


# ---------------------------------------------------------------- cone map

def lr_bound(phi: Potential, t: float, distance: int, prefactor: float) -> float:
    """``min over lambda of prefactor * exp(-distance*lambda + 2|t| ||Phi||_lambda)``."""
    if phi.terms:
        w, dia = phi.weights(), phi.diameters()
    else:
        w, dia = np.zeros(1), np.zeros(1)
    if not np.any(w > 0) or t == 0:
        lam = LAMBDA_BRACKET[1]
        return prefactor * math.exp(-distance * lam)

    def g(lam):
        return -distance * lam + 2 * abs(t) * float(np.max(w * np.exp(lam * dia)))

    def slope(lam):
        pieces = w * np.exp(lam * dia)
        top = np.max(pieces)
        active = pieces >= top * (1 - 1e-15)
        return -distance + 2 * abs(t) * float(np.max(pieces[active] * dia[active]))

    res = grid_then_golden(g, *LAMBDA_BRACKET, points=200, slope=slope)
    return prefactor * math.exp(min(res.fx, 700.0))


@dataclass
class ConeMap:
    times: list
    sites: list
    cells: np.ndarray
    bound: np.ndarray
    vacuous_level: float

    @property
    def nonvacuous(self) -> np.ndarray:
        return self.bound <= self.vacuous_level

    @property
    def ok(self) -> bool:
        mask = self.nonvacuous
        return bool(np.all(self.cells[mask] <= self.bound[mask] * (1 + 1e-9) + 1e-12))


def cone_map(
    phi: Potential,
    a: LocalOperator,
    b_site: LocalOperator,
    t_grid: Sequence[float],
    x_grid: Sequence[int],
    window: Window,
    boundary: str = "open",
) -> ConeMap:
    """``||[alpha_t(a), tau_x(b)]||`` on a time-by-site grid, with the Lieb-Robinson bound beside it.

    ``b_site`` is translated so that its window starts at ``x``.
    """
    if not window.contains(a.window):
        raise DomainError(f"operator a on {a.window} outside {window}")
    for x in x_grid:
        if not window.contains(b_site.window.shift(x - b_site.window.lo)):
            raise DomainError(f"site {x} puts b outside {window}")
    ev = Evolver.from_potential(phi, window, boundary)
    n, d = window.size, a.local_dim
    na, nb = operator_norm(a), operator_norm(b_site)
    pref = 2 * na * nb * min(a.window.size, b_site.window.size)
    cells = np.zeros((len(t_grid), len(x_grid)))
    bound = np.zeros_like(cells)
    for i, t in enumerate(t_grid):
        at = evolve(ev, a, t).matrix
        for j, x in enumerate(x_grid):
            off = x - window.lo
            c = apply_right(at, b_site.matrix, off, n, d) - apply_left(b_site.matrix, at, off, n, d)
            cells[i, j] = matrix_norm(c)
            bw = b_site.window.shift(x - b_site.window.lo)
            dist = max(0, bw.lo - a.window.hi, a.window.lo - bw.hi)
            bound[i, j] = lr_bound(phi, t, dist, pref)
    return ConeMap(list(map(float, t_grid)), list(map(int, x_grid)), cells, bound, 2 * na * nb)
