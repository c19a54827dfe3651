"""States on finite windows, von Neumann entropy and mean entropy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericalError, ValidationError
from .hamiltonian import Potential
from .operators import QUBIT, LocalOperator, SiteSpec, Window, check_dim, partial_trace_matrix, roll_sites

CLIP = 1e-14
STATE_TOL = 1e-12
ENTROPY_TRACE_TOL = 1e-8


def _entropy_from_spectrum(p: np.ndarray) -> float:
    # renormalising the kept eigenvalues makes rank-one inputs give exactly 0
    nz = p[p > CLIP]
    nz = nz / nz.sum()
    return float(max(0.0, -np.sum(nz * np.log(nz))))


def von_neumann_entropy(rho) -> float:
    """``-sum p log p`` (natural log) over the eigenvalues of a density matrix."""
    if isinstance(rho, ChainState):
        return _entropy_from_spectrum(rho.spectrum)
    rho = np.asarray(rho)
    tr = np.trace(rho).real
    if abs(tr - 1) > ENTROPY_TRACE_TOL:
        raise ValidationError(f"density matrix has trace {tr}")
    return _entropy_from_spectrum(np.linalg.eigvalsh(rho))


def trace_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if np.allclose(m, m.conj().T, atol=1e-14, rtol=0):
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


@dataclass(frozen=True, eq=False)
class ChainState:
    """Density matrix on a window.

    ``factor`` is any ``B`` with ``B B* = rho`` (``None`` means the tracial
    state, whose factor is ``1/sqrt(dim)``); ``spectrum`` holds its eigenvalues.
    Both are filled lazily when not supplied by the constructor.
    """

    window: Window
    rho: np.ndarray = field(repr=False)
    kind: str = "custom"
    site_spec: SiteSpec = QUBIT
    params: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=np.complex128)
        dim = check_dim(self.site_spec.local_dim, self.window.size)
        if rho.shape != (dim, dim):
            raise DomainError(f"state matrix shape {rho.shape} != ({dim},{dim})")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        tr = np.trace(rho).real
        if abs(tr - 1) > STATE_TOL:
            raise ValidationError(f"state trace {tr} differs from 1")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise ValidationError("state is not Hermitian")
        if self.spectrum.min() < -STATE_TOL:
            raise ValidationError(f"state has negative eigenvalue {self.spectrum.min()}")

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @property
    def is_tracial(self) -> bool:
        return self.kind == "tracial"

    @property
    def spectrum(self) -> np.ndarray:
        if "spectrum" not in self._cache:
            self._diagonalise()
        return self._cache["spectrum"]

    @property
    def factor(self) -> np.ndarray | None:
        if self.is_tracial:
            return None
        if "factor" not in self._cache:
            self._diagonalise()
        return self._cache["factor"]

    def _diagonalise(self):
        p, v = np.linalg.eigh(self.rho)
        p = np.where(p > 0, p, 0.0)
        keep = p > CLIP
        self._cache.setdefault("spectrum", p)
        self._cache.setdefault("factor", v[:, keep] * np.sqrt(p[keep]))

    def expectation(self, a: LocalOperator) -> complex:
        from .operators import embed

        a = embed(a, self.window)
        return complex(np.sum(self.rho.T * a.matrix))

    def reduce(self, window: Window) -> "ChainState":
        """Marginal on a sub-window (unnormalised partial trace of ``rho``)."""
        if not self.window.contains(window):
            raise DomainError(f"{window} is not inside {self.window}")
        keep = [x - self.window.lo for x in window.sites()]
        red = partial_trace_matrix(self.rho, keep, self.window.size, self.site_spec.local_dim)
        kind = "tracial" if self.is_tracial else "reduced"
        st = ChainState(window, red, kind, self.site_spec, {"parent": self.kind})
        return st


def tracial_state(window: Window, site_spec: SiteSpec = QUBIT) -> ChainState:
    dim = check_dim(site_spec.local_dim, window.size)
    cache = {"spectrum": np.full(dim, 1.0 / dim)}
    return ChainState(window, np.eye(dim) / dim, "tracial", site_spec, {}, cache)


def product_state(rho_site, window: Window) -> ChainState:
    rho_site = np.asarray(rho_site, dtype=np.complex128)
    d = rho_site.shape[0]
    if rho_site.shape != (d, d):
        raise ValidationError("single-site density matrix must be square")
    if np.max(np.abs(rho_site - rho_site.conj().T)) > STATE_TOL:
        raise ValidationError("single-site density matrix is not Hermitian")
    if abs(np.trace(rho_site).real - 1) > STATE_TOL:
        raise ValidationError("single-site density matrix does not have unit trace")
    p, v = np.linalg.eigh(rho_site)
    if p.min() < -STATE_TOL:
        raise ValidationError(f"single-site density matrix has eigenvalue {p.min()}")
    p = np.where(p > 0, p, 0.0)
    site_factor = v * np.sqrt(p)
    n = window.size
    check_dim(d, n)
    rho, spec, fac = np.ones((1, 1)), np.ones(1), np.ones((1, 1))
    for _ in range(n):
        rho, spec, fac = np.kron(rho, rho_site), np.kron(spec, p), np.kron(fac, site_factor)
    cache = {"spectrum": spec, "factor": fac}
    return ChainState(window, rho, "product", SiteSpec(d), {"rho_site": rho_site}, cache)


def gibbs_state(phi: Potential, window: Window, beta: float, boundary: str = "periodic") -> ChainState:
    from .dynamics import Evolver

    ev = Evolver.from_potential(phi, window, boundary)
    e, u = ev.eigenvalues, ev.eigenbasis
    logw = -beta * (e - e.min())
    p = np.exp(logw - logw.max())
    p /= p.sum()
    rho = (u * p) @ u.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    cache = {"spectrum": np.sort(p), "factor": u * np.sqrt(p)}
    return ChainState(window, rho, "gibbs", phi.site_spec, {"beta": float(beta), "boundary": boundary}, cache)


def make_state(kind: str, phi: Potential | None, window: Window, **kw) -> ChainState:
    """Factory used by configs: ``tracial``, ``product`` (``rho_site=``) or ``gibbs`` (``beta=``, ``boundary=``)."""
    spec = phi.site_spec if phi is not None else kw.get("site_spec", QUBIT)
    if kind == "tracial":
        return tracial_state(window, spec)
    if kind == "product":
        return product_state(kw["rho_site"], window)
    if kind == "gibbs":
        if phi is None:
            raise DomainError("gibbs state needs a potential")
        return gibbs_state(phi, window, kw.get("beta", 1.0), kw.get("boundary", "periodic"))
    raise DomainError(f"unknown state kind {kind!r}")


# ---------------------------------------------------------------- reports

@dataclass
class EntropyReport:
    sizes: list
    entropies: list
    kind: str

    @property
    def per_site(self) -> list:
        return [s / n for s, n in zip(self.entropies, self.sizes)]

    @property
    def mean_entropy_estimate(self) -> float:
        return self.per_site[-1]

    @property
    def increments(self) -> list:
        """Entropy gained per added site, a faster-converging estimator for Gibbs families."""
        out = []
        for (n0, s0), (n1, s1) in zip(zip(self.sizes, self.entropies), zip(self.sizes[1:], self.entropies[1:])):
            out.append((s1 - s0) / (n1 - n0))
        return out

    @property
    def monotone_per_site(self) -> bool:
        ps = self.per_site
        return all(b <= a + 1e-12 for a, b in zip(ps, ps[1:])) or all(b >= a - 1e-12 for a, b in zip(ps, ps[1:]))


def mean_entropy(states: Sequence[ChainState]) -> EntropyReport:
    if len(states) < 2:
        raise DomainError("mean entropy needs at least two window sizes")
    states = sorted(states, key=lambda s: s.window.size)
    sizes = [s.window.size for s in states]
    ents = [von_neumann_entropy(s) for s in states]
    kind = states[0].kind
    rep = EntropyReport(sizes, ents, kind)
    if kind == "product":
        single = _entropy_from_spectrum(np.linalg.eigvalsh(states[0].params["rho_site"]))
        dev = max(abs(v - single) for v in rep.per_site)
        if dev > 1e-12:
            raise NumericalError("product-state entropy per site is not size independent", {"deviation": dev})
    return rep


def mean_entropy_family(kind: str, phi: Potential | None, sizes: Sequence[int], **kw) -> EntropyReport:
    states = [make_state(kind, phi, Window(0, n - 1), **kw) for n in sizes]
    return mean_entropy(states)


@dataclass
class InvarianceReport:
    time_deviation: float
    translation_deviation: float
    t: float
    shift: int
    tol: float = 1e-10

    @property
    def time_invariant(self) -> bool:
        return self.time_deviation <= self.tol

    @property
    def translation_invariant(self) -> bool:
        return self.translation_deviation <= self.tol

    @property
    def passed(self) -> bool:
        return self.time_invariant and self.translation_invariant


def invariance_check(state: ChainState, ev, shift: int = 1, t: float = 1.0, tol: float = 1e-10) -> InvarianceReport:
    """Trace-norm distance of ``rho`` to its time evolution and to its cyclic translate."""
    if ev.window != state.window:
        raise DomainError(f"evolver window {ev.window} differs from state window {state.window}")
    if state.is_tracial:
        # a multiple of the identity commutes with every unitary and every shift
        return InvarianceReport(0.0, 0.0, float(t), int(shift), tol)
    w = ev.propagator(t)
    rho = state.rho
    moved = w.conj().T @ rho @ w
    dt = trace_norm(moved - rho)
    shifted = roll_sites(rho, shift, state.window.size, state.site_spec.local_dim)
    dx = trace_norm(shifted - rho)
    return InvarianceReport(dt, dx, float(t), int(shift), tol)


def binary_entropy(p: float) -> float:
    return -sum(q * math.log(q) for q in (p, 1 - p) if q > 0)
