"""Operational partitions of unity and parametrised families of them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, IncompatibleError, ValidationError
from .operators import PAULI, QUBIT, LocalOperator, SiteSpec, Window, check_dim, identity, matrix_norm

COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Partition:
    """Family ``{x_i}`` with ``sum x_i* x_i = 1``, all on one window."""

    elements: tuple
    family: str = "custom"
    params: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        els = tuple(self.elements)
        if not els:
            raise ValidationError("a partition needs at least one element")
        w, spec = els[0].window, els[0].site_spec
        for x in els:
            if x.window != w:
                raise DomainError("partition elements must share one window")
            if x.site_spec != spec:
                raise IncompatibleError("partition elements live on different site spaces")
        object.__setattr__(self, "elements", els)
        res = self.completeness_residual
        if not res <= COMPLETENESS_TOL:
            raise ValidationError(f"sum x_i* x_i differs from 1 by {res:.3e}")

    @property
    def Z(self) -> int:
        return len(self.elements)

    @property
    def window(self) -> Window:
        return self.elements[0].window

    @property
    def site_spec(self) -> SiteSpec:
        return self.elements[0].site_spec

    @property
    def completeness_residual(self) -> float:
        dim = self.elements[0].dim
        s = sum(x.matrix.conj().T @ x.matrix for x in self.elements)
        return matrix_norm(s - np.eye(dim))

    def describe(self) -> dict:
        return {"family": self.family, "Z": self.Z, "window": [self.window.lo, self.window.hi]}


def trivial_partition(window: Window = Window(0, 0), site_spec: SiteSpec = QUBIT) -> Partition:
    return Partition((identity(window, site_spec),), "trivial")


def projective_partition(observable: LocalOperator, Z: int | None = None, tol: float = 1e-9) -> Partition:
    """Spectral projectors of a Hermitian observable.

    Eigenvalues closer than ``tol`` share a projector.  With ``Z`` smaller than
    the number of distinct eigenvalues, neighbouring eigenspaces are merged into
    ``Z`` contiguous groups of nearly equal size.
    """
    m = observable.matrix
    if np.max(np.abs(m - m.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise ValidationError("projective partitions need a Hermitian observable")
    e, v = np.linalg.eigh(m)
    groups, start = [], 0
    for k in range(1, len(e) + 1):
        if k == len(e) or e[k] - e[k - 1] > tol:
            groups.append(list(range(start, k)))
            start = k
    if Z is not None:
        if Z < 1:
            raise DomainError("Z must be positive")
        if Z < len(groups):
            cuts = np.array_split(np.arange(len(groups)), Z)
            groups = [sum((groups[i] for i in c), []) for c in cuts]
    els = []
    for g in groups:
        vg = v[:, g]
        els.append(LocalOperator(observable.window, vg @ vg.conj().T, observable.site_spec))
    return Partition(tuple(els), "projective", {"eigenvalues": e.tolist()})


def weighted_unitary_partition(probabilities: Sequence[float], unitaries: Sequence[LocalOperator]) -> Partition:
    p = np.asarray(probabilities, dtype=float)
    if len(p) != len(unitaries):
        raise DomainError("need one unitary per probability")
    if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise ValidationError(f"probabilities must be nonnegative and sum to 1, got sum {p.sum()}")
    for u in unitaries:
        if matrix_norm(u.matrix.conj().T @ u.matrix - np.eye(u.dim)) > 1e-10:
            raise ValidationError("weighted-unitary family needs unitary operators")
    els = tuple(np.sqrt(pi) * u for pi, u in zip(p, unitaries))
    return Partition(els, "weighted_unitary", {"probabilities": p.tolist()})


def isometry_partition(G: np.ndarray, window: Window, site_spec: SiteSpec = QUBIT) -> Partition:
    """Split the isometry ``Q`` from ``G = QR`` into ``Z`` square Kraus blocks."""
    dim = check_dim(site_spec.local_dim, window.size)
    Z = G.shape[0] // dim
    q, r = np.linalg.qr(G)
    diag = np.diag(r)
    q = q * np.where(diag == 0, 1.0, diag / np.where(diag == 0, 1.0, np.abs(diag)))
    els = tuple(LocalOperator(window, q[i * dim : (i + 1) * dim], site_spec) for i in range(Z))
    return Partition(els, "random")


def random_partition(Z: int, window: Window, rng: np.random.Generator, site_spec: SiteSpec = QUBIT) -> Partition:
    dim = check_dim(site_spec.local_dim, window.size)
    G = rng.standard_normal((Z * dim, dim)) + 1j * rng.standard_normal((Z * dim, dim))
    return isometry_partition(G, window, site_spec)


def unitary_from_generator(K: np.ndarray) -> np.ndarray:
    """``exp(i H)`` with ``H`` the Hermitian part of ``K``."""
    h = 0.5 * (K + K.conj().T)
    e, v = np.linalg.eigh(h)
    return (v * np.exp(1j * e)) @ v.conj().T


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


# ---------------------------------------------------------------- families

FAMILIES = ("trivial", "projective", "weighted_unitary", "random", "file")


@dataclass
class FamilySpec:
    """Which partitions to generate and where.

    ``observable`` (projective) is a Pauli name or a matrix on ``window``;
    ``probabilities`` (weighted_unitary) fixes the initial weights; ``path``
    (file) names a serialised partition.
    """

    family: str
    Z: int = 2
    window: Window = Window(0, 0)
    site_spec: SiteSpec = QUBIT
    observable: object = None
    probabilities: Sequence[float] | None = None
    path: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown partition family {self.family!r}; choose from {FAMILIES}")
        if self.Z < 1:
            raise DomainError("Z must be positive")
        if self.probabilities is not None:
            p = np.asarray(self.probabilities, dtype=float)
            if abs(p.sum() - 1) > 1e-12 or np.any(p < 0):
                raise ValidationError(f"probabilities must be nonnegative and sum to 1, got {list(p)}")
            self.Z = len(p)

    @property
    def dim(self) -> int:
        return check_dim(self.site_spec.local_dim, self.window.size)

    def to_dict(self) -> dict:
        out = {"family": self.family, "Z": self.Z, "window": [self.window.lo, self.window.hi]}
        if isinstance(self.observable, str):
            out["observable"] = self.observable
        if self.probabilities is not None:
            out["probabilities"] = list(map(float, self.probabilities))
        if self.path:
            out["path"] = self.path
        return out


def _observable_matrix(spec: FamilySpec) -> np.ndarray:
    obs = spec.observable
    if isinstance(obs, str):
        # sum_k 2^k sigma_k: nondegenerate, so its projectors resolve the product basis
        n, p = spec.window.size, PAULI[obs.lower()]
        m = np.zeros((2**n, 2**n), dtype=np.complex128)
        for k in range(n):
            m += 2.0**k * np.kron(np.kron(np.eye(2**k), p), np.eye(2 ** (n - k - 1)))
        return m
    return np.asarray(obs, dtype=np.complex128)


def _gaussian(shape, rng):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def initial_params(spec: FamilySpec, rng: np.random.Generator) -> dict:
    """Parameters of the first candidate: the configured partition where one is configured."""
    if spec.family in ("trivial", "file"):
        return {}
    if spec.family == "projective":
        if spec.observable is not None:
            return {"observable": _observable_matrix(spec)}
        return sample_params(spec, rng)
    if spec.family == "weighted_unitary":
        params = sample_params(spec, rng)
        if spec.probabilities is not None:
            params["probabilities"] = np.asarray(spec.probabilities, dtype=float)
        return params
    return sample_params(spec, rng)


def sample_params(spec: FamilySpec, rng: np.random.Generator) -> dict:
    D, Z = spec.dim, spec.Z
    if spec.family in ("trivial", "file"):
        return {}
    if spec.family == "projective":
        g = _gaussian((D, D), rng)
        return {"observable": g + g.conj().T}
    if spec.family == "weighted_unitary":
        logits = rng.standard_normal(Z)
        p = np.exp(logits - logits.max())
        return {"probabilities": p / p.sum(), "generators": _gaussian((Z, D, D), rng)}
    return {"G": _gaussian((Z * D, D), rng)}


def perturb_params(spec: FamilySpec, params: dict, rng: np.random.Generator, scale: float) -> dict:
    """Gaussian kick on one randomly chosen coordinate block of the parameters."""
    if not params:
        return {}
    out = {k: np.array(v, copy=True) for k, v in params.items()}
    if spec.family == "projective":
        m = out["observable"]
        i, j = rng.integers(m.shape[0]), rng.integers(m.shape[1])
        kick = scale * complex(rng.standard_normal(), rng.standard_normal()) * max(1.0, np.abs(m).max())
        m[i, j] += kick
        m[j, i] = np.conj(m[i, j]) if i != j else m[i, i].real
        return out
    if spec.family == "weighted_unitary":
        if "generators" not in out:
            out["generators"] = np.zeros((spec.Z, spec.dim, spec.dim), dtype=np.complex128)
        if rng.random() < 0.5:
            logp = np.log(np.maximum(out["probabilities"], 1e-300))
            k = rng.integers(len(logp))
            logp[k] += scale * rng.standard_normal()
            p = np.exp(logp - logp.max())
            out["probabilities"] = p / p.sum()
        else:
            k = rng.integers(spec.Z)
            i, j = rng.integers(spec.dim), rng.integers(spec.dim)
            out["generators"][k, i, j] += scale * complex(rng.standard_normal(), rng.standard_normal())
        return out
    G = out["G"]
    i, j = rng.integers(G.shape[0]), rng.integers(G.shape[1])
    G[i, j] += scale * complex(rng.standard_normal(), rng.standard_normal()) * np.abs(G).max()
    return out


def realize(spec: FamilySpec, params: dict) -> Partition:
    if spec.family == "trivial":
        return trivial_partition(spec.window, spec.site_spec)
    if spec.family == "file":
        from .serialization import load_partition

        return load_partition(spec.path)
    if spec.family == "projective":
        obs = LocalOperator(spec.window, params["observable"], spec.site_spec)
        return projective_partition(obs, spec.Z)
    if spec.family == "weighted_unitary":
        p = np.asarray(params["probabilities"], dtype=float)
        p = p / p.sum()
        gens = params.get("generators")
        us = []
        for k in range(spec.Z):
            u = np.eye(spec.dim) if gens is None else unitary_from_generator(gens[k])
            us.append(LocalOperator(spec.window, u, spec.site_spec))
        return weighted_unitary_partition(p, us)
    return isometry_partition(params["G"], spec.window, spec.site_spec)
