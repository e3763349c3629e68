"""Dense operators on (C^d)^{(x)N} and on Mat(N) (x) End((C^d)^{(x)N}).

Site 1 is the leftmost tensor factor. When an auxiliary factor is present it
sits to the left of all sites.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionCapError, HermiticityError, SpaceMismatchError
from .kernels import embed_pair_dense

DIM_CAP = 16384


@dataclass(frozen=True)
class SpaceDescriptor:
    n_sites: int
    local_dim: int
    has_aux: bool = False
    cap: int = DIM_CAP

    def __post_init__(self):
        if self.n_sites < 1 or self.local_dim < 1:
            raise ValueError("n_sites and local_dim must be positive")
        if self.dim > self.cap:
            raise DimensionCapError(f"dimension {self.dim} exceeds cap {self.cap}")

    @property
    def quantum_dim(self) -> int:
        return self.local_dim ** self.n_sites

    @property
    def aux_dim(self) -> int:
        return self.n_sites if self.has_aux else 1

    @property
    def dim(self) -> int:
        return self.aux_dim * self.quantum_dim

    def quantum(self) -> "SpaceDescriptor":
        return SpaceDescriptor(self.n_sites, self.local_dim, False, self.cap)

    def with_aux(self) -> "SpaceDescriptor":
        return SpaceDescriptor(self.n_sites, self.local_dim, True, self.cap)

    def __eq__(self, other):
        if not isinstance(other, SpaceDescriptor):
            return NotImplemented
        return (self.n_sites, self.local_dim, self.has_aux) == (other.n_sites, other.local_dim, other.has_aux)

    def __hash__(self):
        return hash((self.n_sites, self.local_dim, self.has_aux))


def local_space(d: int, n_sites: int = 1) -> SpaceDescriptor:
    return SpaceDescriptor(n_sites, d)


class Operator:
    """Dense complex square matrix tagged with its space."""

    __slots__ = ("space", "entries")
    __array_priority__ = 100

    def __init__(self, space: SpaceDescriptor, entries):
        entries = np.asarray(entries, dtype=np.complex128)
        if entries.shape != (space.dim, space.dim):
            raise SpaceMismatchError(f"entries shape {entries.shape} does not match space dim {space.dim}")
        self.space = space
        self.entries = entries

    @property
    def dim(self) -> int:
        return self.space.dim

    def _check(self, other: "Operator") -> None:
        if self.space != other.space:
            raise SpaceMismatchError(f"space mismatch: {self.space} vs {other.space}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.entries @ other.entries)
        return self.entries @ np.asarray(other)

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check(other)
        return Operator(self.space, self.entries + other.entries)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        self._check(other)
        return Operator(self.space, self.entries - other.entries)

    def __neg__(self):
        return Operator(self.space, -self.entries)

    def __mul__(self, c):
        if isinstance(c, Operator) or np.ndim(c) != 0:
            return NotImplemented
        return Operator(self.space, complex(c) * self.entries)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return Operator(self.space, self.entries / complex(c))

    def __repr__(self):
        s = self.space
        return f"Operator(N={s.n_sites}, d={s.local_dim}, aux={s.has_aux}, dim={s.dim})"


def zeros(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.zeros((space.dim, space.dim), dtype=np.complex128))


def identity(space: SpaceDescriptor) -> Operator:
    return Operator(space, np.eye(space.dim, dtype=np.complex128))


def kron(a: Operator, b: Operator) -> Operator:
    """a (x) b with ``a`` leftmost; both must be site spaces of one local dimension."""
    if a.space.has_aux or b.space.has_aux:
        raise SpaceMismatchError("kron is defined on quantum spaces only; use lift_aux")
    if a.space.local_dim != b.space.local_dim:
        raise SpaceMismatchError("kron needs equal local dimensions")
    space = SpaceDescriptor(a.space.n_sites + b.space.n_sites, a.space.local_dim)
    return Operator(space, np.kron(a.entries, b.entries))


def dagger(a: Operator) -> Operator:
    return Operator(a.space, a.entries.conj().T)


def commutator(a: Operator, b: Operator) -> Operator:
    a._check(b)
    return Operator(a.space, a.entries @ b.entries - b.entries @ a.entries)


def frobenius_norm(a) -> float:
    x = a.entries if isinstance(a, Operator) else np.asarray(a)
    return float(np.linalg.norm(x))


def trace(a: Operator) -> complex:
    return complex(np.trace(a.entries))


# ---------------------------------------------------------------------------
# fixed bases
# ---------------------------------------------------------------------------

_PAULI = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def pauli(alpha: int) -> Operator:
    if alpha not in (0, 1, 2, 3):
        raise ValueError(f"Pauli index must be 0..3, got {alpha!r}")
    return Operator(local_space(2), _PAULI[alpha].copy())


def pauli_matrix(alpha: int) -> np.ndarray:
    return _PAULI[alpha].copy()


@lru_cache(maxsize=None)
def _perm_matrix(d: int) -> np.ndarray:
    p = np.zeros((d * d, d * d), dtype=np.complex128)
    for a in range(d):
        for b in range(d):
            # P = sum_ab E_ab (x) E_ba
            p[a * d + b, b * d + a] = 1.0
    p.setflags(write=False)
    return p


def permutation_matrix(d: int) -> np.ndarray:
    return _perm_matrix(d).copy()


def permutation_p(d: int) -> Operator:
    """Flip operator on C^d (x) C^d."""
    if d < 2:
        raise ValueError("permutation operator needs local dimension >= 2")
    return Operator(local_space(d, 2), _perm_matrix(d).copy())


def swap_factors(op: np.ndarray, d: int) -> np.ndarray:
    """P op P for a d^2 x d^2 matrix (exchange of the two tensor factors)."""
    return op.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)


def heisenberg_q(d: int) -> np.ndarray:
    # 1-based k in the defining formula: Q_kk = exp(2 pi i k / d)
    return np.diag(np.exp(2j * np.pi * np.arange(1, d + 1) / d))


def heisenberg_lambda(d: int) -> np.ndarray:
    lam = np.zeros((d, d), dtype=np.complex128)
    for k in range(d):
        lam[k, (k + 1) % d] = 1.0
    return lam


@lru_cache(maxsize=None)
def _t_matrix(a1: int, a2: int, d: int) -> np.ndarray:
    q = np.linalg.matrix_power(heisenberg_q(d), a1 % d)
    lam = np.linalg.matrix_power(heisenberg_lambda(d), a2 % d)
    t = np.exp(1j * np.pi * a1 * a2 / d) * (q @ lam)
    t.setflags(write=False)
    return t


def heisenberg_t_matrix(a1: int, a2: int, d: int) -> np.ndarray:
    """exp(pi i a1 a2 / d) Q^a1 Lambda^a2 with the integers taken literally.

    The phase is not periodic in a1, a2 (only the pair T_a (x) T_{-a} is), so
    callers that need T_{-a} pass negative integers here.
    """
    return _t_matrix(int(a1), int(a2), int(d))


def heisenberg_t(a1: int, a2: int, d: int) -> Operator:
    """T_a for a in Z_d x Z_d, indices reduced to 0..d-1 first."""
    if d < 2:
        raise ValueError("Heisenberg basis needs d >= 2")
    return Operator(local_space(d), heisenberg_t_matrix(a1 % d, a2 % d, d).copy())


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


def _local_matrix(op, d: int, n: int) -> np.ndarray:
    x = op.entries if isinstance(op, Operator) else np.asarray(op, dtype=np.complex128)
    if x.shape != (d ** n, d ** n):
        raise SpaceMismatchError(f"expected a {d ** n}x{d ** n} local operator, got {x.shape}")
    return x


def embed_pair(op, i: int, j: int, space: SpaceDescriptor) -> Operator:
    """Act with the two-site ``op`` on sites ``i``, ``j`` (1-based) of ``space``.

    The first local factor of ``op`` goes to site ``i``; ``i > j`` is allowed.
    """
    if space.has_aux:
        raise SpaceMismatchError("embed_pair targets a quantum space; lift afterwards")
    n, d = space.n_sites, space.local_dim
    if i == j:
        raise ValueError("embed_pair needs two distinct sites")
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"site index out of range 1..{n}: ({i}, {j})")
    mat = _local_matrix(op, d, 2)
    return Operator(space, embed_pair_dense(mat, i - 1, j - 1, n, d))


def embed_pair_array(mat: np.ndarray, i: int, j: int, n: int, d: int) -> np.ndarray:
    """Raw-array variant of embed_pair with 0-based sites (no checks)."""
    return embed_pair_dense(mat, i, j, n, d)


def embed_site(op, i: int, space: SpaceDescriptor) -> Operator:
    """Act with a one-site operator on site ``i`` (1-based)."""
    n, d = space.n_sites, space.local_dim
    if not 1 <= i <= n:
        raise IndexError(f"site index out of range 1..{n}: {i}")
    mat = _local_matrix(op, d, 1)
    left = np.eye(d ** (i - 1), dtype=np.complex128)
    right = np.eye(d ** (n - i), dtype=np.complex128)
    return Operator(space, np.kron(np.kron(left, mat), right))


def product_operator(ops) -> Operator:
    """op_1 (x) op_2 (x) ... for one-site operators."""
    ops = list(ops)
    d = ops[0].space.local_dim if isinstance(ops[0], Operator) else np.asarray(ops[0]).shape[0]
    out = np.ones((1, 1), dtype=np.complex128)
    for op in ops:
        out = np.kron(out, _local_matrix(op, d, 1))
    return Operator(SpaceDescriptor(len(ops), d), out)


def cyclic_shift(space: SpaceDescriptor) -> Operator:
    """Unitary S moving the state of site j to site j+1 (site N to site 1)."""
    n, d = space.n_sites, space.local_dim
    dim = space.quantum_dim
    idx = np.arange(dim).reshape((d,) * n)
    # (S v)[s_1..s_N] = v[s_2..s_N, s_1]
    src = np.moveaxis(idx, -1, 0).reshape(-1)
    s = np.zeros((dim, dim), dtype=np.complex128)
    s[np.arange(dim), src] = 1.0
    return Operator(space.quantum(), s)


# ---------------------------------------------------------------------------
# auxiliary space
# ---------------------------------------------------------------------------


def aux_assemble(blocks) -> Operator:
    """sum_ij E_ij (x) blocks[i][j]. ``None`` entries count as zero blocks."""
    n = len(blocks)
    space = None
    for row in blocks:
        if len(row) != n:
            raise SpaceMismatchError("block array must be square")
        for b in row:
            if b is None:
                continue
            if not isinstance(b, Operator):
                raise TypeError("blocks must be Operators")
            if space is None:
                space = b.space
            elif b.space != space:
                raise SpaceMismatchError("inconsistent block spaces")
    if space is None:
        raise ValueError("cannot infer block space from all-zero blocks")
    if space.has_aux or space.n_sites != n:
        raise SpaceMismatchError(f"blocks must live on the {n}-site quantum space")
    dq = space.quantum_dim
    full = np.zeros((n * dq, n * dq), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            if blocks[i][j] is not None:
                full[i * dq:(i + 1) * dq, j * dq:(j + 1) * dq] = blocks[i][j].entries
    return Operator(space.with_aux(), full)


def aux_block(full: Operator, i: int, j: int) -> Operator:
    """Block (i, j), 0-based, of an aux (x) quantum operator."""
    if not full.space.has_aux:
        raise SpaceMismatchError("operator has no auxiliary factor")
    dq = full.space.quantum_dim
    return Operator(full.space.quantum(), full.entries[i * dq:(i + 1) * dq, j * dq:(j + 1) * dq].copy())


def trace_aux(full: Operator) -> Operator:
    if not full.space.has_aux:
        raise SpaceMismatchError("trace_aux needs an auxiliary factor")
    n = full.space.aux_dim
    dq = full.space.quantum_dim
    t = full.entries.reshape(n, dq, n, dq)
    return Operator(full.space.quantum(), np.einsum("iaib->ab", t))


def lift_aux(op: Operator) -> Operator:
    """1_N (x) op."""
    if op.space.has_aux:
        raise SpaceMismatchError("operator already carries an auxiliary factor")
    n = op.space.n_sites
    return Operator(op.space.with_aux(), np.kron(np.eye(n, dtype=np.complex128), op.entries))


# ---------------------------------------------------------------------------
# spectra and serialization
# ---------------------------------------------------------------------------


def hermiticity_deviation(h: Operator) -> float:
    nrm = frobenius_norm(h)
    if nrm == 0.0:
        return 0.0
    return float(np.linalg.norm(h.entries - h.entries.conj().T) / nrm)


def hermitian_eigenvalues(h: Operator, herm_tol: float = 1e-10) -> np.ndarray:
    dev = hermiticity_deviation(h)
    if dev > herm_tol:
        raise HermiticityError(dev, herm_tol)
    sym = 0.5 * (h.entries + h.entries.conj().T)
    return np.linalg.eigvalsh(sym)


def multiplicities(values, tol: float = 1e-8) -> list[int]:
    """Cluster size of each sorted value (values within ``tol`` relative form one cluster)."""
    values = np.asarray(values)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    mult = np.ones(len(values), dtype=int)
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or abs(values[k] - values[k - 1]) > tol * scale:
            mult[start:k] = k - start
            start = k
    return mult.tolist()


def operator_to_json(op: Operator) -> dict:
    e = op.entries
    return {
        "dims": op.dim,
        "entries": [[float(x.real), float(x.imag)] for x in e.reshape(-1)],
    }


def operator_from_json(doc: dict, space: SpaceDescriptor | None = None) -> Operator:
    d = int(doc["dims"])
    arr = np.asarray(doc["entries"], dtype=float)
    if arr.shape != (d * d, 2):
        raise ValueError("entries must hold dims^2 [re, im] pairs")
    mat = (arr[:, 0] + 1j * arr[:, 1]).reshape(d, d)
    if space is None:
        space = SpaceDescriptor(1, d, cap=max(DIM_CAP, d))
    return Operator(space, mat)


def dump_operator(op: Operator, path) -> None:
    with open(path, "w") as fh:
        json.dump(operator_to_json(op), fh)
