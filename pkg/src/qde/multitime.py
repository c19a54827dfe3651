"""Multi-time density matrices of repeated measurements and their entropy rate.

For a partition ``{x_i}``, dynamics ``alpha(A) = W A W*`` with ``W = exp(iHt)``
and a state ``omega``, the record state of ``M`` measurements has entries

    rho[(i_0..i_{M-1}), (j_0..j_{M-1})] =
        omega(x*_{i_0} alpha(x*_{i_1}) ... alpha^{M-1}(x*_{i_{M-1}})
              alpha^{M-1}(x_{j_{M-1}}) ... alpha(x_{j_1}) x_{j_0}).

The outer powers of ``W`` cancel, so with ``omega = tr(B B* .)`` every entry
is a Hilbert-Schmidt inner product ``<v_I, v_J>`` of the vectors

    v_{(j_0..j_m)} = x_{j_m} W* x_{j_{m-1}} W* ... W* x_{j_0} B,

which obey ``v_{(J, j)} = x_j W* v_J``.  Building level ``m`` from level
``m-1`` costs one dense product per prefix, every ``rho_m`` with ``m <= M`` is
a by-product, and the columns of ``B`` are independent so they are processed
in chunks that bound memory.  Multi-indices are ordered with ``i_0`` slowest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Evolver
from .errors import ContainmentError, DomainError, NumericalError, ResourceError
from .operators import LIMITS, apply_left, apply_right
from .partitions import FamilySpec, Partition, initial_params, perturb_params, realize, sample_params
from .states import ChainState, _entropy_from_spectrum, von_neumann_entropy

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-9


@dataclass
class MultiTimeState:
    M: int
    Z: int
    matrix: np.ndarray = field(repr=False)
    entropy: float = 0.0
    residuals: dict = field(default_factory=dict)


def validate_record(matrix: np.ndarray, M: int, Z: int) -> MultiTimeState:
    herm = float(np.max(np.abs(matrix - matrix.conj().T)))
    spec = np.linalg.eigvalsh(matrix)
    tr = float(np.trace(matrix).real)
    residuals = {"hermitian": herm, "min_eigenvalue": float(spec.min()), "trace_error": abs(tr - 1)}
    if herm > HERMITIAN_TOL or spec.min() < -PSD_TOL or abs(tr - 1) > TRACE_TOL:
        raise NumericalError(f"multi-time state M={M} violates its invariants", residuals)
    return MultiTimeState(M, Z, matrix, _entropy_from_spectrum(spec), residuals)


def _state_on(state: ChainState, ev: Evolver) -> ChainState:
    if state.window == ev.window:
        return state
    if state.window.contains(ev.window):
        return state.reduce(ev.window)
    raise ContainmentError(f"state on {state.window} does not cover evolver window {ev.window}")


def _chunk_columns(npaths: int, dim: int, ncols: int) -> int:
    per_col = 16 * dim * npaths * 2
    return max(1, min(ncols, LIMITS.chunk_bytes // per_col))


def record_grams(p: Partition, ev: Evolver, state: ChainState, M_max: int, t: float = 1.0) -> list:
    """Raw record matrices ``rho_1 .. rho_{M_max}`` (not yet validated)."""
    if M_max < 1:
        raise DomainError("M must be positive")
    Z = p.Z
    if Z**M_max > LIMITS.max_record_dim:
        raise ResourceError(f"Z^M = {Z**M_max} exceeds the record cap {LIMITS.max_record_dim}")
    if not ev.window.contains(p.window):
        raise ContainmentError(f"partition on {p.window} exceeds evolver window {ev.window}")
    state = _state_on(state, ev)
    n, d = ev.window.size, ev.site_spec.local_dim
    D = ev.hamiltonian.dim
    off = p.window.lo - ev.window.lo
    xs = [x.matrix for x in p.elements]
    grams = [np.zeros((Z ** (m + 1), Z ** (m + 1)), dtype=np.complex128) for m in range(M_max)]
    sitewise = ev.site_hamiltonian is not None

    B = state.factor
    ncols = D if B is None else B.shape[1]
    scale = 1.0 / math.sqrt(D)
    # tracial: W* (x_j ⊗ 1) B is a cheap right action on W*
    first = None
    if B is None and M_max > 1 and not sitewise:
        wstar = ev.propagator(-t)
        first = [apply_right(wstar, x, off, n, d) * scale for x in xs]
    C = _chunk_columns(Z**M_max, D, ncols)
    for c0 in range(0, ncols, C):
        c1 = min(ncols, c0 + C)
        if B is None:
            block = np.zeros((D, c1 - c0), dtype=np.complex128)
            block[np.arange(c0, c1), np.arange(c1 - c0)] = scale
        else:
            block = np.ascontiguousarray(B[:, c0:c1], dtype=np.complex128)
        level = np.empty((Z, D, c1 - c0), dtype=np.complex128)
        for j, x in enumerate(xs):
            level[j] = apply_left(x, block, off, n, d)
        _accumulate(grams[0], level)
        for m in range(1, M_max):
            nxt = np.empty((Z ** (m + 1), D, c1 - c0), dtype=np.complex128)
            for k in range(level.shape[0]):
                if m == 1 and first is not None:
                    w = first[k][:, c0:c1]
                else:
                    w = ev.apply(-t, level[k])
                for j, x in enumerate(xs):
                    nxt[k * Z + j] = apply_left(x, w, off, n, d)
            level = nxt
            _accumulate(grams[m], level)
    return grams


def _accumulate(gram: np.ndarray, level: np.ndarray):
    v = level.reshape(level.shape[0], -1)
    gram += v.conj() @ v.T


def build_multitime_states(p: Partition, ev: Evolver, state: ChainState, M_max: int, t: float = 1.0) -> list:
    return [validate_record(g, m + 1, p.Z) for m, g in enumerate(record_grams(p, ev, state, M_max, t))]


def build_multitime_state(p: Partition, ev: Evolver, state: ChainState, M: int, t: float = 1.0) -> MultiTimeState:
    return build_multitime_states(p, ev, state, M, t)[-1]


# ------------------------------------------------------------ entropy rate

@dataclass
class EntropyRateEstimate:
    entropies: list
    Z: int
    t: float
    window_entropy: float
    window_sites: int
    local_dim: int
    partition: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)

    @property
    def M_max(self) -> int:
        return len(self.entropies)

    @property
    def rate(self) -> float:
        return self.entropies[-1] / self.M_max

    @property
    def diff_rate(self) -> float:
        if self.M_max == 1:
            return self.entropies[0]
        return self.entropies[-1] - self.entropies[-2]

    @property
    def increments(self) -> list:
        s = [0.0] + list(self.entropies)
        return [b - a for a, b in zip(s, s[1:])]

    @property
    def localized_bound(self) -> float:
        """``S(omega|W) + |W| log d``, the finite-window cap on every ``S(rho_M)``."""
        return self.window_entropy + self.window_sites * math.log(self.local_dim)

    def localized_ok(self, tol: float = 1e-9) -> bool:
        return all(s <= self.localized_bound + tol for s in self.entropies)

    def dimension_ok(self, tol: float = 1e-9) -> bool:
        logz = math.log(self.Z)
        s = self.entropies
        ok = all(v <= (m + 1) * logz + tol for m, v in enumerate(s))
        ok &= all(s[m] <= s[m + 1] + logz + tol and s[m + 1] <= s[m] + logz + tol for m in range(len(s) - 1))
        return ok


def entropy_rate(p: Partition, ev: Evolver, state: ChainState, M_max: int, t: float = 1.0) -> EntropyRateEstimate:
    """``S(rho_M)`` for ``M = 1..M_max``.

    The dynamical entropy is a limsup of ``S(rho_M)/M``; a finite run reports
    both ``S(rho_M)/M`` and the last increment and privileges neither.
    """
    records = build_multitime_states(p, ev, state, M_max, t)
    st = _state_on(state, ev)
    return EntropyRateEstimate(
        entropies=[r.entropy for r in records],
        Z=p.Z,
        t=float(t),
        window_entropy=von_neumann_entropy(st),
        window_sites=ev.window.size,
        local_dim=ev.site_spec.local_dim,
        partition=p.describe(),
        residuals=[r.residuals for r in records],
    )


# -------------------------------------------------------------- sup search

@dataclass
class SearchResult:
    best: EntropyRateEstimate
    partition: Partition
    log: list
    family: dict
    budget: int
    seed: int

    @property
    def rate(self) -> float:
        return self.best.rate


def _log_entry(index: int, move: str, est: EntropyRateEstimate) -> dict:
    return {
        "index": index,
        "move": move,
        "rate": est.rate,
        "diff_rate": est.diff_rate,
        "entropies": list(est.entropies),
        "localized_ok": est.localized_ok(),
        "dimension_ok": est.dimension_ok(),
    }


def sup_search(
    ev: Evolver,
    state: ChainState,
    family: FamilySpec,
    M_max: int,
    budget: int = 1,
    seed: int = 0,
    t: float = 1.0,
    step: float = 0.5,
) -> SearchResult:
    """Seeded search for the partition with the largest ``S(rho_M)/M`` in a family.

    Evaluation 0 is the configured partition.  Afterwards odd evaluations draw
    fresh parameters and even ones kick one coordinate block of the incumbent;
    the kick size grows after an improvement and shrinks otherwise.  The result
    is an estimate of the supremum, labelled with family, budget and seed.
    """
    if budget < 1:
        raise DomainError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    params = initial_params(family, rng)
    part = realize(family, params)
    est = entropy_rate(part, ev, state, M_max, t)
    best = (est, part, params)
    log = [_log_entry(0, "initial", est)]
    for k in range(1, budget):
        if k % 2 == 1:
            move, cand = "sample", sample_params(family, rng)
        else:
            move, cand = "perturb", perturb_params(family, best[2], rng, step)
        part = realize(family, cand)
        est = entropy_rate(part, ev, state, M_max, t)
        log.append(_log_entry(k, move, est))
        if est.rate > best[0].rate:
            best = (est, part, cand)
            if move == "perturb":
                step *= 1.2
        elif move == "perturb":
            step *= 0.7
    return SearchResult(best[0], best[1], log, family.to_dict(), budget, seed)
