"""State spaces, collective spin operators, and product/trace machinery.

Two interchangeable backends describe a system of spin domains (ensembles
of N identical spin-1/2 particles):

* ``collective`` -- each domain is restricted to its maximal-spin symmetric
  ladder (j = N/2), dimension N+1 per domain.  Valid whenever the dynamics
  only involves collective raising/lowering and the initial state is a
  product of symmetric (Dicke) domain states.
* ``full`` -- each domain carries its complete 2**N product space.  Needed
  for per-spin noise and for initial states with weight outside the
  symmetric sector.

Basis ordering is fixed so that serialized matrices are comparable across
runs:

* domains appear in declaration order (tensor/kron order);
* collective backend: level index i within a domain corresponds to the
  Jz eigenvalue m = N/2 - i, so index 0 is the fully excited level and
  index N the ground level;
* full backend: basis states are bitstrings with site 0 as the most
  significant bit and up = 0, down = 1, in lexicographic order.  Index 0
  is all-up, index 2**N - 1 is all-down.

With these conventions the global ground state is the last basis vector
in either backend.

Density matrices are always stored dense.  Operators are stored dense up
to dimension ``DENSE_LIMIT`` and as CSR above it; jump operators in the
full backend are always sparse.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import NumericalFailure

# Dense/sparse storage cutoff for operators (total Hilbert dimension).
DENSE_LIMIT = 256

# Tolerances for state validation.
HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
EIGENVALUE_FLOOR = -1e-9
NORM_TOL = 1e-12

MatrixLike = Union[np.ndarray, sp.csr_array]


class Backend(enum.Enum):
    COLLECTIVE = "collective"
    FULL = "full"


def _domain_dim(pop: int, backend: Backend) -> int:
    return pop + 1 if backend is Backend.COLLECTIVE else 2**pop


@dataclass(frozen=True)
class BasisDescriptor:
    """Backend choice plus the ordered list of domain populations."""

    backend: Backend
    domain_pops: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.backend, Backend):
            raise ValueError(f"unknown backend: {self.backend!r}")
        if len(self.domain_pops) == 0:
            raise ValueError("at least one domain is required")
        for n in self.domain_pops:
            if not isinstance(n, (int, np.integer)) or n < 1:
                raise ValueError(f"domain population must be a positive integer, got {n!r}")
        object.__setattr__(self, "domain_pops", tuple(int(n) for n in self.domain_pops))

    @property
    def domain_dims(self) -> tuple[int, ...]:
        return tuple(_domain_dim(n, self.backend) for n in self.domain_pops)

    @property
    def dim(self) -> int:
        return math.prod(self.domain_dims)

    @property
    def num_domains(self) -> int:
        return len(self.domain_pops)

    def subset(self, keep: Sequence[int]) -> "BasisDescriptor":
        """Descriptor for the reduced space over the kept domains (original order)."""
        keep = _check_domain_indices(self, keep)
        return BasisDescriptor(self.backend, tuple(self.domain_pops[i] for i in keep))

    def counterpart(self) -> "BasisDescriptor":
        """Same domains in the other backend."""
        other = Backend.FULL if self.backend is Backend.COLLECTIVE else Backend.COLLECTIVE
        return BasisDescriptor(other, self.domain_pops)


def single_domain_basis(pop: int, backend: Backend) -> BasisDescriptor:
    return BasisDescriptor(backend, (pop,))


def _check_domain_indices(basis: BasisDescriptor, domains: Iterable[int]) -> tuple[int, ...]:
    idx = tuple(sorted(set(int(m) for m in domains)))
    if not idx:
        raise ValueError("domain index set must be nonempty")
    if idx[0] < 0 or idx[-1] >= basis.num_domains:
        raise ValueError(f"domain indices {idx} out of range for {basis.num_domains} domains")
    return idx


@dataclass(frozen=True)
class Operator:
    """A square matrix together with the basis it is expressed in."""

    matrix: MatrixLike
    basis: BasisDescriptor

    def __post_init__(self):
        d = self.basis.dim
        if self.matrix.shape != (d, d):
            raise ValueError(
                f"operator shape {self.matrix.shape} does not match basis dimension {d}"
            )

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def dag(self) -> "Operator":
        """Adjoint operator (e.g. raising from lowering)."""
        if self.is_sparse:
            return Operator(self.matrix.conj().T.tocsr(), self.basis)
        return Operator(self.matrix.conj().T.copy(), self.basis)


@dataclass(frozen=True)
class PureState:
    """Complex amplitude vector with basis metadata; unit norm enforced."""

    amplitudes: np.ndarray
    basis: BasisDescriptor

    def __post_init__(self):
        vec = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if vec.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitude vector length {vec.size} does not match basis dimension {self.basis.dim}"
            )
        norm = np.linalg.norm(vec)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", vec)

    def projector(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.basis)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix with basis metadata.

    Validation checks Hermiticity (max-abs 1e-10), trace (within 1e-8 of 1)
    and the eigenvalue floor (-1e-9).  Internal hot paths may pass
    ``validate=False``; anything returned to callers is validated.
    """

    matrix: np.ndarray
    basis: BasisDescriptor
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        d = self.basis.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match basis dimension {d}")
        object.__setattr__(self, "matrix", mat)
        if not self.validate:
            return
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > HERMITICITY_TOL:
            raise ValueError(f"matrix is not Hermitian: max deviation {herm:.3e}")
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"trace {tr} deviates from 1 beyond {TRACE_TOL}")
        evals = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
        if evals[0] < EIGENVALUE_FLOOR:
            raise ValueError(f"negative eigenvalue {evals[0]:.3e} below floor {EIGENVALUE_FLOOR}")


def _require_same_basis(a: BasisDescriptor, b: BasisDescriptor):
    if a != b:
        raise ValueError(f"basis mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# collective operators
# ---------------------------------------------------------------------------


def _popcounts(num_bits: int) -> np.ndarray:
    """Number of set bits for every index below 2**num_bits."""
    return np.array([bin(i).count("1") for i in range(2**num_bits)], dtype=np.int64)


def collective_lowering(N: int, backend: Backend) -> Operator:
    """Collective lowering operator J- for a single domain of N spins.

    Collective backend: ladder matrix with <j,m-1|J-|j,m> = sqrt(j(j+1) - m(m-1))
    for j = N/2.  Full backend: sum of single-site lowering operators (sparse).
    The adjoint of the result is the raising operator J+.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"spin count must be a positive integer, got {N!r}")
    if not isinstance(backend, Backend):
        raise ValueError(f"unknown backend: {backend!r}")
    basis = single_domain_basis(int(N), backend)
    if backend is Backend.COLLECTIVE:
        j = N / 2.0
        m = j - np.arange(N)  # levels m = j .. -j+1, each lowered to m-1
        elems = np.sqrt(j * (j + 1) - m * (m - 1))
        mat = np.zeros((N + 1, N + 1), dtype=complex)
        mat[np.arange(1, N + 1), np.arange(N)] = elems
        return Operator(mat, basis)
    # full backend: flip one up-bit (0) to down (1) per site, summed over sites
    dim = 2**N
    cols: list[int] = []
    rows: list[int] = []
    for site in range(N):
        bit = 1 << (N - 1 - site)
        for b in range(dim):
            if not b & bit:
                cols.append(b)
                rows.append(b | bit)
    data = np.ones(len(rows), dtype=complex)
    mat = sp.csr_array((data, (rows, cols)), shape=(dim, dim))
    return Operator(mat, basis)


def collective_jz(N: int, backend: Backend) -> Operator:
    """Collective Jz for a single domain; diagonal in both backends."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"spin count must be a positive integer, got {N!r}")
    if not isinstance(backend, Backend):
        raise ValueError(f"unknown backend: {backend!r}")
    basis = single_domain_basis(int(N), backend)
    if backend is Backend.COLLECTIVE:
        diag = N / 2.0 - np.arange(N + 1)
        return Operator(np.diag(diag).astype(complex), basis)
    diag = N / 2.0 - _popcounts(N)
    return Operator(sp.diags_array(diag.astype(complex), format="csr"), basis)


# ---------------------------------------------------------------------------
# embedding and jump operators
# ---------------------------------------------------------------------------


def _identity(dim: int, sparse: bool) -> MatrixLike:
    if sparse:
        return sp.eye_array(dim, dtype=complex, format="csr")
    return np.eye(dim, dtype=complex)


def embed(op: Operator, basis: BasisDescriptor, m: int) -> Operator:
    """Embed a single-domain operator at domain index m, identity elsewhere."""
    if not 0 <= m < basis.num_domains:
        raise ValueError(f"domain index {m} out of range")
    dims = basis.domain_dims
    if op.basis.dim != dims[m]:
        raise ValueError(
            f"operator dimension {op.basis.dim} does not match domain {m} dimension {dims[m]}"
        )
    sparse = op.is_sparse or basis.dim > DENSE_LIMIT
    left = math.prod(dims[:m]) if m > 0 else 1
    right = math.prod(dims[m + 1 :]) if m + 1 < len(dims) else 1
    mat: MatrixLike = op.matrix.tocsr() if sp.issparse(op.matrix) else np.asarray(op.matrix)
    if sparse and not sp.issparse(mat):
        mat = sp.csr_array(mat)
    if sparse:
        if left > 1:
            mat = sp.kron(_identity(left, True), mat, format="csr")
        if right > 1:
            mat = sp.kron(mat, _identity(right, True), format="csr")
        mat = sp.csr_array(mat)
    else:
        if left > 1:
            mat = np.kron(_identity(left, False), mat)
        if right > 1:
            mat = np.kron(mat, _identity(right, False))
    return Operator(mat, basis)


def reservoir_jump(basis: BasisDescriptor, domains: Iterable[int]) -> Operator:
    """Summed collective lowering operator over the coupled domains.

    This is the jump operator of one engineered reservoir: all spins in the
    listed domains are indistinguishable to the bath, so the reservoir
    couples through the sum of their collective lowering operators.
    Always materialized sparse in the full backend.
    """
    idx = _check_domain_indices(basis, domains)
    force_sparse = basis.backend is Backend.FULL or basis.dim > DENSE_LIMIT
    total = None
    for m in idx:
        op = collective_lowering(basis.domain_pops[m], basis.backend)
        if force_sparse and not op.is_sparse:
            op = Operator(sp.csr_array(op.matrix), op.basis)
        part = embed(op, basis, m).matrix
        total = part if total is None else total + part
    if sp.issparse(total):
        total = sp.csr_array(total)
    return Operator(total, basis)


def single_spin_lowering(basis: BasisDescriptor, domain: int, site: int) -> Operator:
    """sigma- acting on one physical spin (full backend only), sparse."""
    _require_full_backend(basis, "single-spin operators")
    pos = _site_bit_position(basis, domain, site)
    dim = basis.dim
    bit = 1 << (sum(basis.domain_pops) - 1 - pos)
    cols = np.array([b for b in range(dim) if not b & bit], dtype=np.int64)
    rows = cols | bit
    data = np.ones(len(cols), dtype=complex)
    return Operator(sp.csr_array((data, (rows, cols)), shape=(dim, dim)), basis)


def single_spin_z(basis: BasisDescriptor, domain: int, site: int) -> Operator:
    """sigma_z acting on one physical spin (full backend only), sparse."""
    _require_full_backend(basis, "single-spin operators")
    pos = _site_bit_position(basis, domain, site)
    bit = 1 << (sum(basis.domain_pops) - 1 - pos)
    diag = np.array([1.0 if not b & bit else -1.0 for b in range(basis.dim)], dtype=complex)
    return Operator(sp.diags_array(diag, format="csr"), basis)


def _require_full_backend(basis: BasisDescriptor, what: str):
    if basis.backend is not Backend.FULL:
        raise ValueError(f"{what} require the full backend")


def _site_bit_position(basis: BasisDescriptor, domain: int, site: int) -> int:
    if not 0 <= domain < basis.num_domains:
        raise ValueError(f"domain index {domain} out of range")
    if not 0 <= site < basis.domain_pops[domain]:
        raise ValueError(f"site index {site} out of range for domain {domain}")
    return sum(basis.domain_pops[:domain]) + site


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


def dicke_level_vector(N: int, k: int, backend: Backend) -> np.ndarray:
    """Amplitudes of the symmetric Dicke state with k excited spins.

    Collective backend: the basis vector at level index N - k.  Full
    backend: the normalized superposition of all bitstrings with k up-spins.
    """
    if not 0 <= k <= N:
        raise ValueError(f"Dicke level k={k} outside [0, {N}]")
    if backend is Backend.COLLECTIVE:
        vec = np.zeros(N + 1, dtype=complex)
        vec[N - k] = 1.0
        return vec
    vec = np.zeros(2**N, dtype=complex)
    downs = N - k
    amp = 1.0 / math.sqrt(math.comb(N, downs))
    pops = _popcounts(N)
    vec[pops == downs] = amp
    return vec


def _bitstring_vector(N: int, spec: str) -> np.ndarray:
    s = spec.strip().lower()
    if len(s) != N or any(c not in "ud" for c in s):
        raise ValueError(f"bitstring {spec!r} must have {N} characters from 'u'/'d'")
    idx = 0
    for c in s:
        idx = (idx << 1) | (1 if c == "d" else 0)
    vec = np.zeros(2**N, dtype=complex)
    vec[idx] = 1.0
    return vec


LevelSpec = Union[int, str, np.ndarray, DensityMatrix]


def _domain_density(basis: BasisDescriptor, m: int, level: LevelSpec) -> np.ndarray:
    N = basis.domain_pops[m]
    dim = basis.domain_dims[m]
    if isinstance(level, DensityMatrix):
        if level.basis.domain_pops != (N,) or level.basis.backend is not basis.backend:
            raise ValueError(f"domain {m}: density matrix basis does not match")
        return level.matrix
    if isinstance(level, np.ndarray):
        if level.shape != (dim, dim):
            raise ValueError(f"domain {m}: matrix shape {level.shape}, expected ({dim}, {dim})")
        return np.asarray(level, dtype=complex)
    if isinstance(level, str):
        if basis.backend is not Backend.FULL:
            raise ValueError("bitstring levels require the full backend")
        vec = _bitstring_vector(N, level)
        return np.outer(vec, vec.conj())
    if isinstance(level, (int, np.integer)):
        vec = dicke_level_vector(N, int(level), basis.backend)
        return np.outer(vec, vec.conj())
    raise ValueError(f"domain {m}: unsupported level specification {level!r}")


def product_state(basis: BasisDescriptor, levels: Sequence[LevelSpec]) -> DensityMatrix:
    """Tensor-product density matrix from per-domain levels.

    Each entry of ``levels`` is one of: an integer k (symmetric Dicke state
    with k excited spins), a bitstring of 'u'/'d' characters (full backend),
    or a single-domain density matrix (ndarray or DensityMatrix).
    """
    if len(levels) != basis.num_domains:
        raise ValueError(f"expected {basis.num_domains} levels, got {len(levels)}")
    out = None
    for m, level in enumerate(levels):
        dm = _domain_density(basis, m, level)
        out = dm if out is None else np.kron(out, dm)
    return DensityMatrix(out, basis)


def pure_product_state(
    basis: BasisDescriptor, levels: Sequence[Union[int, str, np.ndarray]]
) -> PureState:
    """Tensor-product pure state from per-domain Dicke levels, bitstrings, or
    explicit amplitude vectors (length = that domain's local dimension)."""
    if len(levels) != basis.num_domains:
        raise ValueError(f"expected {basis.num_domains} levels, got {len(levels)}")
    out = np.ones(1, dtype=complex)
    for m, level in enumerate(levels):
        N = basis.domain_pops[m]
        if isinstance(level, str):
            if basis.backend is not Backend.FULL:
                raise ValueError("bitstring levels require the full backend")
            vec = _bitstring_vector(N, level)
        elif isinstance(level, (int, np.integer)):
            vec = dicke_level_vector(N, int(level), basis.backend)
        elif isinstance(level, np.ndarray):
            vec = np.asarray(level, dtype=complex).ravel()
            if vec.size != basis.domain_dims[m]:
                raise ValueError(
                    f"domain {m}: amplitude vector has length {vec.size}, "
                    f"expected {basis.domain_dims[m]}"
                )
        else:
            raise ValueError(f"domain {m}: unsupported pure level {level!r}")
        out = np.kron(out, vec)
    return PureState(out, basis)


def ground_state(basis: BasisDescriptor) -> DensityMatrix:
    """All spins down; the last basis vector in either backend."""
    return product_state(basis, [0] * basis.num_domains)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix over the kept domains, in original order."""
    keep_idx = _check_domain_indices(rho.basis, keep)
    dims = rho.basis.domain_dims
    M = len(dims)
    if len(keep_idx) == M:
        return rho
    tensor = rho.matrix.reshape(dims + dims)
    # einsum subscripts: traced domains share a row/column index
    row = [chr(ord("a") + i) for i in range(M)]
    col = [chr(ord("A") + i) for i in range(M)]
    for i in range(M):
        if i not in keep_idx:
            col[i] = row[i]
    out_sub = "".join(row[i] for i in keep_idx) + "".join(col[i] for i in keep_idx)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out_sub, tensor)
    sub_basis = rho.basis.subset(keep_idx)
    d = sub_basis.dim
    return DensityMatrix(reduced.reshape(d, d), sub_basis, validate=rho.validate)


def fidelity_with_pure(rho: DensityMatrix, psi: PureState) -> float:
    """<psi|rho|psi>, a real number in [0, 1]."""
    _require_same_basis(rho.basis, psi.basis)
    val = np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)
    if abs(val.imag) > 1e-10:
        raise NumericalFailure(f"fidelity has imaginary residue {val.imag:.3e}")
    return float(min(1.0, max(0.0, val.real)))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    _require_same_basis(rho.basis, sigma.basis)
    diff = rho.matrix - sigma.matrix
    evals = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(evals)))


# ---------------------------------------------------------------------------
# backend conversion through the symmetric-subspace isometry
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def symmetric_isometry(N: int) -> sp.csr_array:
    """Isometry from the (N+1)-level collective ladder into the 2**N space.

    Column i (level m = N/2 - i) maps to the equal-weight superposition of
    all bitstrings with i down-spins.  Columns are orthonormal, so
    S.conj().T @ S is the identity on the collective space.
    """
    if N < 1:
        raise ValueError("spin count must be >= 1")
    pops = _popcounts(N)
    rows = np.arange(2**N)
    cols = pops
    data = np.array([1.0 / math.sqrt(math.comb(N, int(i))) for i in pops], dtype=complex)
    return sp.csr_array((data, (rows, cols)), shape=(2**N, N + 1))


def basis_isometry(basis: BasisDescriptor) -> sp.csr_array:
    """Kron product of per-domain symmetric isometries for a collective basis.

    Maps collective-backend coordinates into the full backend; shape
    (full_dim, collective_dim).
    """
    if basis.backend is not Backend.COLLECTIVE:
        raise ValueError("basis_isometry expects a collective-backend basis")
    out = None
    for N in basis.domain_pops:
        S = symmetric_isometry(N)
        out = S if out is None else sp.csr_array(sp.kron(out, S, format="csr"))
    return out


def to_full_basis(obj):
    """Map a collective-backend state or operator into the full backend."""
    S = basis_isometry(obj.basis)
    target = obj.basis.counterpart()
    if isinstance(obj, PureState):
        return PureState(S @ obj.amplitudes, target)
    if isinstance(obj, DensityMatrix):
        return DensityMatrix(S @ obj.matrix @ S.conj().T.toarray(), target)
    if isinstance(obj, Operator):
        mat = sp.csr_array(S @ obj.matrix @ S.conj().T) if obj.is_sparse else S @ obj.matrix @ S.conj().T.toarray()
        return Operator(mat, target)
    raise ValueError(f"cannot convert {type(obj).__name__}")


def to_collective_basis(obj):
    """Project a full-backend state or operator onto the symmetric sector.

    Faithful (trace/norm preserving) only when the input is supported on
    the symmetric sector of every domain; the resulting state validation
    catches leakage outside it.
    """
    if obj.basis.backend is not Backend.FULL:
        raise ValueError("to_collective_basis expects a full-backend input")
    target = obj.basis.counterpart()
    S = basis_isometry(target)
    Sd = S.conj().T.tocsr()
    if isinstance(obj, PureState):
        return PureState(Sd @ obj.amplitudes, target)
    if isinstance(obj, DensityMatrix):
        return DensityMatrix((Sd @ obj.matrix) @ S.toarray(), target)
    if isinstance(obj, Operator):
        mat = Sd @ obj.matrix @ S
        mat = sp.csr_array(mat) if sp.issparse(mat) else mat
        return Operator(mat, target)
    raise ValueError(f"cannot convert {type(obj).__name__}")
