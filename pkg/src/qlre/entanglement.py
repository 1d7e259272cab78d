"""Entanglement measures: concurrence, formation entropy, negativities.

Two-qubit states get the closed-form concurrence and the entanglement of
formation derived from it.  Arbitrary bipartitions of a multi-domain state
are handled by negativity and logarithmic negativity through the partial
transpose, which needs no restriction on local dimensions.  Three-qubit
states additionally get the geometric-mean tripartite negativity.

All values are in ebits where a unit applies; logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import NumericalFailure
from .hilbert import DensityMatrix

# Eigenvalue hygiene thresholds for the concurrence spectrum.
_EIG_IMAG_TOL = 1e-9
_EIG_NEG_TOL = -1e-10

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


def _require_qubit_factors(rho: DensityMatrix, count: int):
    dims = rho.basis.domain_dims
    if len(dims) != count or any(d != 2 for d in dims):
        raise ValueError(
            f"expected a state of {count} two-level factors, got dimensions {dims}"
        )


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state.

    Uses the spin-flipped matrix rho_tilde = (sy x sy) conj(rho) (sy x sy)
    and the square roots of the eigenvalues of rho rho_tilde in descending
    order.  The product matrix is not Hermitian, so a general eigensolver
    is used and the spectrum is checked: imaginary parts beyond 1e-9 or
    real parts below -1e-10 indicate a broken input and raise.
    """
    _require_qubit_factors(rho, 2)
    rho_tilde = _YY @ rho.matrix.conj() @ _YY
    evals = np.linalg.eigvals(rho.matrix @ rho_tilde)
    if np.max(np.abs(evals.imag)) > _EIG_IMAG_TOL:
        raise NumericalFailure(
            f"concurrence spectrum has imaginary residue {np.max(np.abs(evals.imag)):.3e}"
        )
    real = evals.real
    if np.min(real) < _EIG_NEG_TOL:
        raise NumericalFailure(
            f"concurrence spectrum has negative eigenvalue {np.min(real):.3e}"
        )
    lams = np.sqrt(np.clip(real, 0.0, None))
    lams[::-1].sort()
    return float(max(0.0, lams[0] - lams[1] - lams[2] - lams[3]))


def eof_from_concurrence(c: float) -> float:
    """Entanglement of formation as a function of concurrence, in ebits."""
    c = float(c)
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"concurrence must lie in [0, 1], got {c!r}")
    if c == 0.0:
        return 0.0
    if c == 1.0:
        return 1.0
    x = 0.5 * (1.0 + math.sqrt(1.0 - c * c))
    if x >= 1.0:  # c small enough that 1 - c^2 rounds to 1
        return 0.0
    return float(-x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x))


def entanglement_of_formation(rho: DensityMatrix) -> float:
    """Entanglement of formation of a two-qubit state, in ebits."""
    return eof_from_concurrence(concurrence(rho))


def _partition_indices(rho: DensityMatrix, partition: Iterable[int]) -> tuple[int, ...]:
    dims = rho.basis.domain_dims
    idx = tuple(sorted(set(int(i) for i in partition)))
    if not idx:
        raise ValueError("partition must contain at least one factor")
    if idx[0] < 0 or idx[-1] >= len(dims):
        raise ValueError(f"partition {idx} out of range for {len(dims)} factors")
    if len(idx) == len(dims):
        raise ValueError("partition must leave at least one factor on the other side")
    return idx


def partial_transpose(rho: DensityMatrix, partition: Iterable[int]) -> np.ndarray:
    """Matrix of rho transposed on the listed tensor factors."""
    idx = _partition_indices(rho, partition)
    dims = rho.basis.domain_dims
    m = len(dims)
    tensor = rho.matrix.reshape(dims + dims)
    perm = list(range(2 * m))
    for i in idx:
        perm[i], perm[m + i] = perm[m + i], perm[i]
    d = rho.basis.dim
    return tensor.transpose(perm).reshape(d, d)


def _pt_trace_norm(rho: DensityMatrix, partition: Iterable[int]) -> float:
    pt = partial_transpose(rho, partition)
    evals = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    return float(np.sum(np.abs(evals)))


def negativity(rho: DensityMatrix, partition: Iterable[int]) -> float:
    """Negativity across the bipartition (listed factors vs the rest).

    Half the summed magnitude of the negative partial-transpose spectrum;
    round-off on states with a positive partial transpose is absorbed by
    flooring at zero.  Transposing either side gives the same value.
    """
    return max(0.0, 0.5 * (_pt_trace_norm(rho, partition) - 1.0))


def log_negativity(rho: DensityMatrix, partition: Iterable[int]) -> float:
    """Logarithmic negativity (base 2) across the bipartition, floored at 0."""
    return max(0.0, math.log2(_pt_trace_norm(rho, partition)))


def tripartite_negativity(rho: DensityMatrix) -> float:
    """Geometric mean of the three one-against-two negativities.

    Defined for three two-level factors; zero whenever any single-factor
    cut has a positive partial transpose.
    """
    _require_qubit_factors(rho, 3)
    parts = [negativity(rho, [i]) for i in range(3)]
    if any(p == 0.0 for p in parts):
        return 0.0
    return float(math.pow(parts[0] * parts[1] * parts[2], 1.0 / 3.0))


@dataclass(frozen=True)
class EntanglementReport:
    """Bundle of the measures for one bipartite state."""

    concurrence: float
    eof: float
    negativity: Optional[float] = None
    log_negativity: Optional[float] = None


def entanglement_report(
    rho: DensityMatrix, partition: Optional[Iterable[int]] = None
) -> EntanglementReport:
    """Concurrence and formation entropy, plus negativities if a partition is given.

    With no explicit partition, a two-factor state is split between its
    factors.
    """
    if partition is None and rho.basis.num_domains == 2:
        partition = [0]
    c = concurrence(rho)
    e = eof_from_concurrence(c)
    if partition is None:
        return EntanglementReport(c, e)
    return EntanglementReport(
        c, e, negativity(rho, partition), log_negativity(rho, partition)
    )
