"""Master-equation assembly, adaptive integration, and steady-state search.

All dynamics is purely dissipative: a sum of terms rate * D[O] with
D[O] rho = 2 O rho O^dag - O^dag O rho - rho O^dag O.  Time is measured in
scaled units (gamma t / 2), so the base collective rate is 1 and a single
excited spin decays as exp(-2 tau).  Thermal, per-spin, and dephasing rates
are expressed relative to that unit.

The integrator is an embedded Dormand-Prince 5(4) pair with step-size
control and first-same-as-last reuse, run directly on the density matrix.
Steady states are found by integrating until the right-hand side is small
in Frobenius norm; the stationary manifold is degenerate (dark states), so
the limit depends on the initial state and a Liouvillian null-space solve
would not be meaningful.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConvergenceFailure,
    IntegrationFailure,
    NumericalFailure,
    UndefinedResultError,
    UnsupportedConfigurationError,
)
from .hilbert import (
    Backend,
    BasisDescriptor,
    DensityMatrix,
    Operator,
    partial_trace,
    reservoir_jump,
    single_spin_lowering,
    single_spin_z,
)

RTOL = 1e-9
ATOL = 1e-11
TRACE_DRIFT_TOL = 1e-8
STEADY_STATE_TOL = 1e-10
MAX_SCALED_TIME = 200.0
# Full-backend runs above this many physical spins need an explicit override.
INDIVIDUAL_SPIN_CAP = 13

ObservableSpec = Union[Operator, Callable[[DensityMatrix], float]]


@dataclass(frozen=True)
class LindbladTerm:
    """One dissipative channel: jump operator and its scaled rate."""

    jump: Operator
    rate: float

    def __post_init__(self):
        r = float(self.rate)
        if not math.isfinite(r) or r < 0:
            raise ValueError(f"rate must be finite and >= 0, got {self.rate!r}")
        object.__setattr__(self, "rate", r)


@dataclass(frozen=True)
class MasterEquation:
    terms: tuple[LindbladTerm, ...]
    basis: BasisDescriptor

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if term.jump.basis != self.basis:
                raise ValueError("all jump operators must share the equation basis")

    @cached_property
    def _compiled(self):
        """Stacked jump blocks and the summed rate*O^dag O, for the fast rhs.

        The K active jumps, scaled by sqrt(2*rate), are stacked vertically
        (V, shape (K d, d)) and horizontally (H, shape (d, K d)) so the
        whole sandwich sum  sum_k 2 r_k O_k rho O_k^dag  costs two matrix
        products per evaluation instead of two per term.
        """
        blocks = []
        acc = None
        for term in self.terms:
            if term.rate == 0.0:
                continue
            O = term.jump.matrix
            w = math.sqrt(2.0 * term.rate)
            blocks.append(w * O)
            OdO = term.rate * (O.conj().T @ O)
            acc = OdO if acc is None else acc + OdO
        if acc is None:
            return None
        acc = 0.5 * (acc + acc.conj().T)
        sparse = any(sp.issparse(b) for b in blocks)
        if sparse:
            blocks = [sp.csr_array(b) if not sp.issparse(b) else b for b in blocks]
            V = sp.csr_array(sp.vstack(blocks, format="csr"))
            H = sp.csr_array(sp.hstack(blocks, format="csr"))
            acc = sp.csr_array(acc)
            accT = sp.csr_array(acc.T)
        else:
            V = np.vstack(blocks)
            H = np.hstack(blocks)
            accT = np.ascontiguousarray(acc.T)
        return len(blocks), V, H, acc, accT


def _rhs_matrix(eq: MasterEquation, y: np.ndarray) -> np.ndarray:
    compiled = eq._compiled
    if compiled is None:
        return np.zeros_like(y)
    n_blocks, V, H, acc, accT = compiled
    d = y.shape[0]
    out = -(acc @ y)
    out -= np.asarray(accT @ np.ascontiguousarray(y.T)).T  # -(y @ acc)
    W = V @ y  # stacked sqrt(2r_k) O_k y
    Wdag = np.ascontiguousarray(
        W.reshape(n_blocks, d, d).transpose(0, 2, 1).conj().reshape(n_blocks * d, d)
    )
    out += np.asarray(H @ Wdag).conj().T  # sum_k 2 r_k O_k y O_k^dag
    return out


def lindblad_rhs(eq: MasterEquation, rho: DensityMatrix) -> np.ndarray:
    """d rho / d(scaled time) for the given equation.

    The result is Hermitian and traceless to 1e-12; a violation signals a
    numeric problem in the assembled terms.
    """
    if rho.basis != eq.basis:
        raise ValueError(f"basis mismatch: {rho.basis} vs {eq.basis}")
    out = _rhs_matrix(eq, rho.matrix)
    herm = np.max(np.abs(out - out.conj().T)) if out.size else 0.0
    tr = abs(out.trace())
    if herm > 1e-12 or tr > 1e-12:
        raise NumericalFailure(
            f"right-hand side violates structure: hermiticity {herm:.3e}, trace {tr:.3e}"
        )
    return out


# ---------------------------------------------------------------------------
# equation builders
# ---------------------------------------------------------------------------


def build_collective_zero_T(
    basis: BasisDescriptor, reservoirs: Sequence[Iterable[int]]
) -> MasterEquation:
    """Zero-temperature engineered reservoirs, one per listed domain set.

    Each reservoir contributes a single jump operator, the summed collective
    lowering operator of its domains, at unit scaled rate.
    """
    terms = tuple(LindbladTerm(reservoir_jump(basis, r), 1.0) for r in reservoirs)
    if not terms:
        raise ValueError("at least one reservoir is required")
    return MasterEquation(terms, basis)


def build_realistic(
    basis: BasisDescriptor,
    reservoirs: Sequence[Iterable[int]],
    nbar: float = 0.0,
    include_individual: bool = False,
    gamma_dep_over_gamma: float = 0.0,
    allow_large: bool = False,
    rates: Optional[Sequence[float]] = None,
) -> MasterEquation:
    """Thermal reservoirs plus optional per-spin decay and dephasing.

    Per reservoir: collective lowering at rate nbar+1 and collective raising
    at rate nbar.  With ``include_individual``, every physical spin gains a
    lowering channel at nbar+1 and a raising channel at nbar (same coupling
    as the collective one).  ``gamma_dep_over_gamma`` adds a sigma_z channel
    per spin at that scaled rate.  Channels with rate zero are dropped, so
    the default arguments reproduce build_collective_zero_T exactly.

    ``rates`` supplies an optional per-reservoir coupling multiple (default
    1 everywhere); it scales both the lowering and raising channels of that
    reservoir.

    Per-spin channels act on individual product-space sites and therefore
    require the full backend.
    """
    nbar = float(nbar)
    gdep = float(gamma_dep_over_gamma)
    if not math.isfinite(nbar) or nbar < 0:
        raise ValueError(f"nbar must be finite and >= 0, got {nbar!r}")
    if not math.isfinite(gdep) or gdep < 0:
        raise ValueError(f"gamma_dep_over_gamma must be finite and >= 0, got {gdep!r}")
    if not reservoirs:
        raise ValueError("at least one reservoir is required")
    if rates is None:
        rates = [1.0] * len(reservoirs)
    rates = [float(r) for r in rates]
    if len(rates) != len(reservoirs):
        raise ValueError(f"got {len(rates)} rates for {len(reservoirs)} reservoirs")
    if any(not math.isfinite(r) or r <= 0 for r in rates):
        raise ValueError(f"reservoir rates must be finite and > 0, got {rates!r}")
    if (include_individual or gdep > 0) and basis.backend is not Backend.FULL:
        raise UnsupportedConfigurationError(
            "per-spin decay and dephasing address individual sites; "
            "use the full backend for this configuration"
        )
    if basis.backend is Backend.FULL:
        total_spins = sum(basis.domain_pops)
        if total_spins > INDIVIDUAL_SPIN_CAP:
            if not allow_large:
                raise UnsupportedConfigurationError(
                    f"{total_spins} spins in the full backend exceeds the default cap of "
                    f"{INDIVIDUAL_SPIN_CAP}; pass allow_large=True to proceed"
                )
            bytes_needed = 16 * basis.dim**2
            print(
                f"large full-backend run: dimension {basis.dim}, "
                f"density matrix ~{bytes_needed / 2**20:.0f} MiB",
                file=sys.stderr,
            )

    terms: list[LindbladTerm] = []
    lowering = [reservoir_jump(basis, r) for r in reservoirs]
    for J, r in zip(lowering, rates):
        terms.append(LindbladTerm(J, r * (nbar + 1.0)))
    if nbar > 0:
        for J, r in zip(lowering, rates):
            terms.append(LindbladTerm(J.dag(), r * nbar))
    if include_individual:
        sites = [
            (m, s) for m in range(basis.num_domains) for s in range(basis.domain_pops[m])
        ]
        for m, s in sites:
            terms.append(LindbladTerm(single_spin_lowering(basis, m, s), nbar + 1.0))
        if nbar > 0:
            for m, s in sites:
                terms.append(LindbladTerm(single_spin_lowering(basis, m, s).dag(), nbar))
    if gdep > 0:
        for m in range(basis.num_domains):
            for s in range(basis.domain_pops[m]):
                terms.append(LindbladTerm(single_spin_z(basis, m, s), gdep))
    return MasterEquation(tuple(terms), basis)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Sampled time series from one integration run."""

    times: np.ndarray
    observables: dict[str, np.ndarray]
    snapshots: Optional[list[DensityMatrix]]
    final_rho: DensityMatrix

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise ValueError("times must be a nonempty 1-D array")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        self.observables = {k: np.asarray(v, dtype=float) for k, v in self.observables.items()}
        for name, series in self.observables.items():
            if series.shape != self.times.shape:
                raise ValueError(f"series {name!r} length does not match times")
        if self.snapshots is not None and len(self.snapshots) != len(self.times):
            raise ValueError("snapshot count does not match times")


@dataclass(frozen=True)
class SteadyStateResult:
    rho: DensityMatrix
    residual: float
    elapsed_scaled_time: float


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) stepper
# ---------------------------------------------------------------------------

_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_DP_ERR = tuple(b5 - b4 for b5, b4 in zip(_DP_B5 + (0.0,), _DP_B4))

_MIN_STEP = 1e-13
_MAX_GROWTH = 5.0
_MIN_SHRINK = 0.2
_SAFETY = 0.9


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


class _Stepper:
    """Adaptive integrator state: current matrix, time, cached derivative."""

    def __init__(self, eq: MasterEquation, y0: np.ndarray, t0: float = 0.0):
        self.eq = eq
        self.y = np.array(y0, dtype=complex, copy=True)
        self.t = float(t0)
        self.rtol = RTOL
        self.atol = ATOL
        self.k1 = _rhs_matrix(eq, self.y)
        self.worst_trace_drift = 0.0
        self.worst_herm_drift = 0.0
        self.h = self._initial_step()

    def _initial_step(self) -> float:
        scale = self.atol + self.rtol * np.abs(self.y)
        d0 = _rms(self.y / scale)
        d1 = _rms(self.k1 / scale)
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        f1 = _rhs_matrix(self.eq, self.y + h0 * self.k1)
        d2 = _rms((f1 - self.k1) / scale) / h0
        dmax = max(d1, d2)
        h1 = max(1e-6, h0 * 1e-3) if dmax <= 1e-15 else (0.01 / dmax) ** 0.2
        return min(100 * h0, h1)

    @property
    def residual(self) -> float:
        """Frobenius norm of the right-hand side at the current state."""
        return float(np.linalg.norm(self.k1))

    def symmetrize(self):
        """Replace the state by its Hermitian part (sample points only).

        The derivative cache stays consistent because the equation is linear
        and maps adjoints to adjoints.
        """
        self.y = 0.5 * (self.y + self.y.conj().T)
        self.k1 = 0.5 * (self.k1 + self.k1.conj().T)

    def _attempt(self, h: float):
        k = [self.k1]
        for row in _DP_A[1:]:
            y_stage = self.y + h * sum(a * ki for a, ki in zip(row, k) if a != 0.0)
            k.append(_rhs_matrix(self.eq, y_stage))
        y_new = self.y + h * sum(b * ki for b, ki in zip(_DP_B5, k) if b != 0.0)
        k7 = _rhs_matrix(self.eq, y_new)
        k.append(k7)
        err = h * sum(e * ki for e, ki in zip(_DP_ERR, k) if e != 0.0)
        scale = self.atol + self.rtol * np.maximum(np.abs(self.y), np.abs(y_new))
        return y_new, k7, _rms(err / scale)

    def step_once(self, t_limit: float) -> bool:
        """Take one accepted step, not crossing t_limit.  True if t advanced."""
        if self.t >= t_limit - 1e-12 * max(1.0, abs(t_limit)):
            return False
        while True:
            h = min(self.h, t_limit - self.t)
            clipped = h < self.h
            if h < _MIN_STEP:
                raise IntegrationFailure(
                    f"step size underflow at scaled time {self.t:.6g} "
                    f"(worst trace drift {self.worst_trace_drift:.3e})"
                )
            y_new, k7, err = self._attempt(h)
            if err <= 1.0:
                trace_drift = abs(y_new.trace() - 1.0)
                herm_drift = float(np.max(np.abs(y_new - y_new.conj().T)))
                if trace_drift > TRACE_DRIFT_TOL or herm_drift > TRACE_DRIFT_TOL:
                    # conservation slipped though the error test passed;
                    # retry with a smaller step
                    self.h = 0.5 * h
                    continue
                self.worst_trace_drift = max(self.worst_trace_drift, trace_drift)
                self.worst_herm_drift = max(self.worst_herm_drift, herm_drift)
                self.t += h
                self.y = y_new
                self.k1 = k7
                if not clipped:
                    factor = _MAX_GROWTH if err == 0 else min(
                        _MAX_GROWTH, max(_MIN_SHRINK, _SAFETY * err**-0.2)
                    )
                    self.h = h * factor
                return True
            self.h = h * max(_MIN_SHRINK, _SAFETY * err**-0.2)

    def advance_to(self, target: float):
        while self.step_once(target):
            pass
        self.t = target


# ---------------------------------------------------------------------------
# high-level drivers
# ---------------------------------------------------------------------------


def _sample_grid(t_max: float, sample_dt: float) -> np.ndarray:
    n = int(math.floor(t_max / sample_dt + 1e-9))
    ts = [i * sample_dt for i in range(n + 1)]
    if t_max - ts[-1] > 1e-9 * max(1.0, t_max):
        ts.append(t_max)
    return np.asarray(ts)


def _evaluate_observables(
    observables: Mapping[str, ObservableSpec], rho: DensityMatrix
) -> dict[str, float]:
    out = {}
    for name, ob in observables.items():
        if isinstance(ob, Operator):
            out[name] = expectation(rho, ob)
        else:
            out[name] = float(ob(rho))
    return out


def evolve(
    eq: MasterEquation,
    rho0: DensityMatrix,
    t_max: float,
    sample_dt: float,
    keep: Optional[Iterable[int]] = None,
    observables: Optional[Mapping[str, ObservableSpec]] = None,
) -> Trajectory:
    """Integrate from rho0 and sample on a regular scaled-time grid.

    ``observables`` maps series names to either Hermitian operators
    (recorded as expectation values) or callables on the sampled state.
    With ``keep``, the reduced state over those domains is stored at every
    sample.  The state is symmetrized at sample points; trace and
    Hermiticity drift are watched over the whole run.
    """
    if rho0.basis != eq.basis:
        raise ValueError(f"basis mismatch: {rho0.basis} vs {eq.basis}")
    if not (t_max > 0):
        raise ValueError(f"t_max must be positive, got {t_max!r}")
    if not (sample_dt > 0):
        raise ValueError(f"sample_dt must be positive, got {sample_dt!r}")
    observables = dict(observables or {})
    keep_idx = None if keep is None else tuple(keep)

    times = _sample_grid(t_max, sample_dt)
    stepper = _Stepper(eq, rho0.matrix)
    series: dict[str, list[float]] = {name: [] for name in observables}
    snapshots: Optional[list[DensityMatrix]] = None if keep_idx is None else []

    for t in times:
        stepper.advance_to(float(t))
        stepper.symmetrize()
        current = DensityMatrix(stepper.y, eq.basis, validate=False)
        for name, value in _evaluate_observables(observables, current).items():
            series[name].append(value)
        if snapshots is not None:
            reduced = partial_trace(current, keep_idx)
            snapshots.append(DensityMatrix(reduced.matrix.copy(), reduced.basis, validate=False))
    # Solver output carries integrator-scale noise; eigenvalues may dip a few
    # 1e-9 below zero for large systems, which input validation would reject.
    final = DensityMatrix(stepper.y.copy(), eq.basis, validate=False)
    return Trajectory(
        times=times,
        observables={k: np.asarray(v) for k, v in series.items()},
        snapshots=snapshots,
        final_rho=final,
    )


def steady_state(
    eq: MasterEquation,
    rho0: DensityMatrix,
    tol: float = STEADY_STATE_TOL,
    max_scaled_time: float = MAX_SCALED_TIME,
) -> SteadyStateResult:
    """Integrate until the right-hand side is below tol in Frobenius norm.

    The stationary state generally depends on rho0: the dissipators share a
    degenerate dark manifold, so there is no unique null vector to solve
    for.  Raises ConvergenceFailure if the residual has not crossed tol by
    ``max_scaled_time``.
    """
    if rho0.basis != eq.basis:
        raise ValueError(f"basis mismatch: {rho0.basis} vs {eq.basis}")
    if not (tol > 0):
        raise ValueError(f"tol must be positive, got {tol!r}")
    stepper = _Stepper(eq, rho0.matrix)
    if stepper.residual < tol:
        return SteadyStateResult(rho0, stepper.residual, 0.0)
    # Near the stationary manifold an explicit stepper hovers at the
    # stability boundary and local truncation noise pins the residual at
    # roughly the local tolerance.  When the residual stalls above the
    # target, tighten the local tolerances so the noise floor drops.
    best = math.inf
    since_improvement = 0
    while stepper.step_once(max_scaled_time):
        resid = stepper.residual
        if resid < tol:
            stepper.symmetrize()
            rho = DensityMatrix(stepper.y.copy(), eq.basis, validate=False)
            return SteadyStateResult(rho, stepper.residual, stepper.t)
        if resid < 0.5 * best:
            best = resid
            since_improvement = 0
        elif resid < 1e5 * tol:
            since_improvement += 1
            if since_improvement >= 30 and stepper.rtol > 1e-14:
                stepper.rtol = max(1e-14, stepper.rtol * 1e-2)
                stepper.atol = max(1e-16, stepper.atol * 1e-2)
                stepper.h *= 0.25
                since_improvement = 0
    raise ConvergenceFailure(
        f"residual {stepper.residual:.3e} still above {tol:.1e} "
        f"at scaled time {max_scaled_time:g}"
    )


def expectation(rho: DensityMatrix, op: Operator) -> float:
    """Tr(rho op) for a Hermitian operator; small imaginary residue dropped."""
    if rho.basis != op.basis:
        raise ValueError(f"basis mismatch: {rho.basis} vs {op.basis}")
    dev = op.matrix - op.matrix.conj().T
    herm = abs(dev).max() if sp.issparse(dev) else float(np.max(np.abs(dev)))
    if herm > 1e-10:
        raise ValueError(f"operator is not Hermitian (max deviation {herm:.3e})")
    if op.is_sparse:
        val = complex(op.matrix.multiply(rho.matrix.T).sum())
    else:
        val = complex(np.einsum("ij,ji->", rho.matrix, op.matrix))
    if abs(val.imag) > 1e-10:
        raise NumericalFailure(f"expectation has imaginary residue {val.imag:.3e}")
    return val.real


def half_max_time(series: Sequence[float], times: Sequence[float]) -> float:
    """First time the series reaches half of its maximum, interpolated.

    This is the generation-speed marker for entanglement curves: the
    earlier the crossing, the faster the protocol.
    """
    s = np.asarray(series, dtype=float)
    t = np.asarray(times, dtype=float)
    if s.size == 0 or s.shape != t.shape:
        raise ValueError("series and times must be nonempty and equally long")
    peak = float(np.max(s))
    if peak <= 0:
        raise UndefinedResultError("series never becomes positive; no half-maximum exists")
    half = 0.5 * peak
    idx = int(np.argmax(s >= half))
    if idx == 0:
        return float(t[0])
    t0, t1 = t[idx - 1], t[idx]
    s0, s1 = s[idx - 1], s[idx]
    return float(t0 + (half - s0) * (t1 - t0) / (s1 - s0))
