"""Dense operator algebra on finite windows of a spin chain.

Every observable is a :class:`LocalOperator`: a square complex matrix together
with the lattice window it lives on.  Tensor factors are ordered by increasing
lattice coordinate and basis states are indexed site-major and
lexicographically, so ``kron(a_lo, ..., a_hi)`` is the matrix of the product
operator.  Binary operations embed both operands into the smallest window that
contains them (tensoring with identities), which realises the inclusion
``A(L1) ⊂ A(L2)`` without caller bookkeeping.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ContainmentError, DomainError, IncompatibleError, ResourceError


@dataclass
class Limits:
    """Size caps for dense objects.  Mutable on purpose: tests and the CLI tune them."""

    max_dim: int = 4096         # 12 qubit sites
    max_record_dim: int = 4096  # Z**M for multi-time states
    chunk_bytes: int = 256 * 2**20


LIMITS = Limits()


@dataclass(frozen=True)
class SiteSpec:
    local_dim: int = 2

    def __post_init__(self):
        if int(self.local_dim) != self.local_dim or self.local_dim < 2:
            raise DomainError(f"local_dim must be an integer >= 2, got {self.local_dim}")


QUBIT = SiteSpec(2)


@dataclass(frozen=True, order=True)
class Window:
    """Closed integer interval ``[lo, hi]`` of lattice sites."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty window [{self.lo}, {self.hi}]")

    @classmethod
    def centered(cls, radius: int) -> "Window":
        return cls(-radius, radius)

    @classmethod
    def site(cls, x: int) -> "Window":
        return cls(x, x)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def sites(self) -> range:
        return range(self.lo, self.hi + 1)

    def contains(self, other: "Window | int") -> bool:
        if isinstance(other, Window):
            return self.lo <= other.lo and other.hi <= self.hi
        return self.lo <= other <= self.hi

    def hull(self, other: "Window") -> "Window":
        return Window(min(self.lo, other.lo), max(self.hi, other.hi))

    def shift(self, x: int) -> "Window":
        return Window(self.lo + x, self.hi + x)

    def distance(self, x: int) -> int:
        """Lattice distance from site ``x`` to the window (0 inside)."""
        return max(0, self.lo - x, x - self.hi)

    def __str__(self):
        return f"[{self.lo},{self.hi}]"


def check_dim(local_dim: int, n_sites: int) -> int:
    dim = local_dim**n_sites
    if dim > LIMITS.max_dim:
        raise ResourceError(
            f"{n_sites} sites of dimension {local_dim} give dim {dim} > cap {LIMITS.max_dim}"
        )
    return dim


@dataclass(frozen=True, eq=False)
class LocalOperator:
    window: Window
    matrix: np.ndarray = field(repr=False)
    site_spec: SiteSpec = QUBIT

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        dim = check_dim(self.site_spec.local_dim, self.window.size)
        if m.shape != (dim, dim):
            raise DomainError(
                f"matrix shape {m.shape} does not match {self.window.size} sites "
                f"of dimension {self.site_spec.local_dim} (expected {dim}x{dim})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def local_dim(self) -> int:
        return self.site_spec.local_dim

    def adjoint(self) -> "LocalOperator":
        return LocalOperator(self.window, self.matrix.conj().T, self.site_spec)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return _hermitian_residual(self.matrix) <= tol * max(1.0, _maxabs(self.matrix))

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, -1.0 * other)

    def __matmul__(self, other):
        return mul(self, other)

    def __mul__(self, c):
        if isinstance(c, LocalOperator):
            return NotImplemented
        return LocalOperator(self.window, complex(c) * self.matrix, self.site_spec)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def __repr__(self):
        return f"LocalOperator(window={self.window}, dim={self.dim}, d={self.local_dim})"


# ---------------------------------------------------------------- constructors

PAULI = {
    "i": np.eye(2, dtype=np.complex128),
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def identity(window: Window, site_spec: SiteSpec = QUBIT) -> LocalOperator:
    dim = check_dim(site_spec.local_dim, window.size)
    return LocalOperator(window, np.eye(dim), site_spec)


def zero(window: Window, site_spec: SiteSpec = QUBIT) -> LocalOperator:
    dim = check_dim(site_spec.local_dim, window.size)
    return LocalOperator(window, np.zeros((dim, dim)), site_spec)


def site_operator(matrix, x: int = 0, site_spec: SiteSpec | None = None) -> LocalOperator:
    matrix = np.asarray(matrix)
    spec = site_spec or SiteSpec(matrix.shape[0])
    return LocalOperator(Window.site(x), matrix, spec)


def pauli(name: str, x: int = 0) -> LocalOperator:
    return site_operator(PAULI[name.lower()], x, QUBIT)


def product_operator(factors: Sequence, lo: int = 0, site_spec: SiteSpec | None = None) -> LocalOperator:
    """Tensor product ``factors[0] ⊗ factors[1] ⊗ ...`` placed on ``[lo, lo+len-1]``."""
    mats = [np.asarray(f, dtype=np.complex128) for f in factors]
    spec = site_spec or SiteSpec(mats[0].shape[0])
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return LocalOperator(Window(lo, lo + len(mats) - 1), out, spec)


# ------------------------------------------------------------ raw tensor maths

def _maxabs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def _hermitian_residual(m: np.ndarray) -> float:
    return _maxabs(m - m.conj().T)


def n_sites_of(dim: int, d: int) -> int:
    n, k = 0, 1
    while k < dim:
        k *= d
        n += 1
    if k != dim:
        raise DomainError(f"dimension {dim} is not a power of {d}")
    return n


def place(matrix: np.ndarray, positions: Sequence[int], n_sites: int, d: int) -> np.ndarray:
    """Matrix acting as ``matrix`` on ``positions`` (in that factor order) and identity elsewhere."""
    m = len(positions)
    if len(set(positions)) != m or any(p < 0 or p >= n_sites for p in positions):
        raise DomainError(f"invalid positions {positions} for {n_sites} sites")
    check_dim(d, n_sites)
    full = np.kron(np.asarray(matrix, dtype=np.complex128), np.eye(d ** (n_sites - m)))
    if list(positions) == list(range(m)):
        return full
    src = [0] * n_sites
    for i, p in enumerate(positions):
        src[p] = i
    rest = [p for p in range(n_sites) if p not in set(positions)]
    for j, p in enumerate(rest):
        src[p] = m + j
    t = full.reshape([d] * (2 * n_sites))
    t = t.transpose(src + [n_sites + s for s in src])
    dim = d**n_sites
    return np.ascontiguousarray(t.reshape(dim, dim))


def roll_sites(matrix: np.ndarray, k: int, n_sites: int, d: int) -> np.ndarray:
    """Conjugate by the cyclic site shift sending the factor at position p to (p+k) mod n."""
    k %= n_sites
    if k == 0:
        return np.array(matrix)
    src = [(p - k) % n_sites for p in range(n_sites)]
    t = np.asarray(matrix).reshape([d] * (2 * n_sites))
    t = t.transpose(src + [n_sites + s for s in src])
    dim = d**n_sites
    return np.ascontiguousarray(t.reshape(dim, dim))


def partial_trace_matrix(matrix: np.ndarray, keep: Iterable[int], n_sites: int, d: int) -> np.ndarray:
    """Trace out every position not in ``keep``; kept factors stay in increasing order."""
    keep = sorted(set(keep))
    if len(keep) == n_sites:
        return np.array(matrix)
    letters = string.ascii_letters
    rows = list(letters[:n_sites])
    cols = list(letters[n_sites : 2 * n_sites])
    for p in range(n_sites):
        if p not in keep:
            cols[p] = rows[p]
    out = "".join(rows[p] for p in keep) + "".join(cols[p] for p in keep)
    t = np.asarray(matrix).reshape([d] * (2 * n_sites))
    r = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    k = d ** len(keep)
    return r.reshape(k, k)


def apply_left(local: np.ndarray, block: np.ndarray, offset: int, n_sites: int, d: int) -> np.ndarray:
    """``(1 ⊗ local ⊗ 1) @ block`` for ``block`` of shape (d**n, C), without building the big matrix."""
    w = n_sites_of(local.shape[0], d)
    left, right = d**offset, d ** (n_sites - offset - w)
    cols = block.shape[1]
    b = block.reshape(left, d**w, right * cols)
    return np.matmul(local, b).reshape(block.shape)


def apply_right(block: np.ndarray, local: np.ndarray, offset: int, n_sites: int, d: int) -> np.ndarray:
    """``block @ (1 ⊗ local ⊗ 1)`` for ``block`` of shape (R, d**n)."""
    w = n_sites_of(local.shape[0], d)
    left, right = d**offset, d ** (n_sites - offset - w)
    rows = block.shape[0]
    b = block.reshape(rows * left, d**w, right).transpose(0, 2, 1)
    out = np.matmul(b, local).transpose(0, 2, 1)
    return np.ascontiguousarray(out).reshape(block.shape)


def matrix_norm(m: np.ndarray) -> float:
    """Largest singular value via a Hermitian eigenvalue problem."""
    m = np.asarray(m)
    scale = _maxabs(m)
    if scale == 0.0:
        return 0.0
    if _hermitian_residual(m) <= 1e-14 * scale:
        return float(np.max(np.abs(np.linalg.eigvalsh(m))))
    if _maxabs(m + m.conj().T) <= 1e-14 * scale:
        return float(np.max(np.abs(np.linalg.eigvalsh(1j * m))))
    top = np.linalg.eigvalsh(m.conj().T @ m)[-1]
    return float(np.sqrt(max(top, 0.0)))


# ------------------------------------------------------------------ operations

def _common_spec(a: LocalOperator, b: LocalOperator) -> SiteSpec:
    if a.site_spec != b.site_spec:
        raise IncompatibleError(f"site spaces differ: {a.site_spec} vs {b.site_spec}")
    return a.site_spec


def embed(op: LocalOperator, target: Window) -> LocalOperator:
    if not target.contains(op.window):
        raise ContainmentError(f"window {op.window} is not inside {target}")
    if target == op.window:
        return op
    d = op.local_dim
    check_dim(d, target.size)
    left = np.eye(d ** (op.window.lo - target.lo))
    right = np.eye(d ** (target.hi - op.window.hi))
    return LocalOperator(target, np.kron(np.kron(left, op.matrix), right), op.site_spec)


def translate(op: LocalOperator, x: int) -> LocalOperator:
    return LocalOperator(op.window.shift(x), op.matrix, op.site_spec)


def _aligned(a: LocalOperator, b: LocalOperator):
    _common_spec(a, b)
    w = a.window.hull(b.window)
    return embed(a, w), embed(b, w), w


def mul(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    a, b, w = _aligned(a, b)
    return LocalOperator(w, a.matrix @ b.matrix, a.site_spec)


def add(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    a, b, w = _aligned(a, b)
    return LocalOperator(w, a.matrix + b.matrix, a.site_spec)


def adjoint(a: LocalOperator) -> LocalOperator:
    return a.adjoint()


def commutator(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    a, b, w = _aligned(a, b)
    return LocalOperator(w, a.matrix @ b.matrix - b.matrix @ a.matrix, a.site_spec)


def operator_norm(op: LocalOperator) -> float:
    return matrix_norm(op.matrix)


def partial_trace(op: LocalOperator, keep: Window) -> LocalOperator:
    """Unnormalised partial trace onto ``keep`` (embedding ``op`` first if needed)."""
    if not op.window.contains(keep):
        op = embed(op, op.window.hull(keep))
    n = op.window.size
    positions = [x - op.window.lo for x in keep.sites()]
    red = partial_trace_matrix(op.matrix, positions, n, op.local_dim)
    return LocalOperator(keep, red, op.site_spec)


def conditional_expectation(op: LocalOperator, keep: Window) -> LocalOperator:
    """Normalised-trace projection ``id_keep ⊗ tr/d^k`` onto the window ``keep``."""
    if not op.window.contains(keep):
        op = embed(op, op.window.hull(keep))
    traced = op.window.size - keep.size
    red = partial_trace(op, keep)
    return LocalOperator(keep, red.matrix / op.local_dim**traced, op.site_spec)


def cyclic_shift(op: LocalOperator, k: int = 1) -> LocalOperator:
    """Periodic translation by ``k`` sites inside the operator's own window."""
    return LocalOperator(op.window, roll_sites(op.matrix, k, op.window.size, op.local_dim), op.site_spec)


def allclose(a: LocalOperator, b: LocalOperator, atol: float = 1e-10) -> bool:
    a, b, _ = _aligned(a, b)
    return _maxabs(a.matrix - b.matrix) <= atol
