"""Switched-system integration and per-sample feasibility validation.

The state obeys dx/dt = f_p(x) with p chosen by a piecewise-constant
switching signal. Integration uses classical fixed-step RK4 with steps split
at switching instants so the active field is constant within every step.

The feasibility validator replays a trajectory and checks, sample by sample
and agent by agent, that the active field at the agent's state lies in the
required cone over the supporting hyperrectangle of the agent's local hull
(the agent's own state together with its in-neighbors' states, sign-flipped
on antagonistic arcs when the signed condition is requested).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DivergenceError, DomainError, OracleScopeError
from .graphs import SwitchingSignal, validate_switching_signal
from .protocols import ProtocolKind, ProtocolSpec

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .scenario import ScenarioConfig


class Assumption(Enum):
    """Which cone condition the validator enforces."""

    GAMMA_STRICT = "GammaStrict"
    RELATIVE_INTERIOR = "RelativeInterior"
    SIGNED_GAMMA_STRICT = "SignedGammaStrict"


@dataclass(eq=False)
class Trajectory:
    """Sampled solution of the switched system.

    ``states[s]`` is the stacked state (agent-major, length n*d) at
    ``times[s]``; ``active_index[s]`` is the family index driving the system
    at that sample (right-continuous at switches). ``feasibility_flags`` is an
    (m, n) boolean array (True = compliant) filled when validation ran.
    """

    times: np.ndarray
    states: np.ndarray
    n: int
    d: int
    active_index: list
    feasibility_flags: np.ndarray | None = None
    feasibility_violations: list["FeasibilityViolation"] | None = None

    @property
    def num_samples(self) -> int:
        return self.times.size

    def blocks(self) -> np.ndarray:
        """States reshaped to (samples, agents, axes)."""
        return self.states.reshape(self.num_samples, self.n, self.d)

    def agent_states(self, i: int) -> np.ndarray:
        """(samples, d) states of 1-based agent i."""
        if not 1 <= i <= self.n:
            raise DomainError(f"agent index {i} outside 1..{self.n}")
        return self.blocks()[:, i - 1, :]


@dataclass(frozen=True)
class FeasibilityViolation:
    """One cone-condition failure: which sample, agent, axis, and why."""

    time: float
    agent: int
    axis: int
    active_p: Any
    reason: str

    def __str__(self) -> str:
        return (
            f"t={self.time:.6g} agent {self.agent} axis {self.axis} "
            f"(p={self.active_p!r}): {self.reason}"
        )


def _rk4_step(f, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _bound_field(spec: ProtocolSpec, p: Any, d: int):
    """Field closure for a fixed active index, hoisted out of the step loop."""
    if spec.kind is ProtocolKind.CUSTOM:
        def f_custom(y: np.ndarray) -> np.ndarray:
            out = np.asarray(spec.field_fn(p, y), dtype=float)
            if out.shape != y.shape:
                raise DomainError("custom field must return a vector shaped like x")
            return out

        return f_custom
    n = spec.n
    M = spec._W[p] * spec._S[p] if spec.kind is ProtocolKind.SIGNED_CONSENSUS else spec._W[p]
    rs = spec._rowsum[p][:, None]
    R = spec._R if spec.kind is ProtocolKind.ROTATED_CONSENSUS else None
    if R is not None and R.shape[1] != d:
        raise DomainError(f"rotation built for d={R.shape[1]} but state has d={d}")

    def f(y: np.ndarray) -> np.ndarray:
        X = y.reshape(n, d)
        base = M @ X - rs * X
        if R is not None:
            base = np.einsum("aij,aj->ai", R, base)
        return base.reshape(-1)

    return f


def _segment_targets(a: float, b: float, h: float) -> list[float]:
    """Step end times covering (a, b], uniform h with a trailing short step.

    The last target is snapped to b exactly so samples land on switching
    instants and the horizon end.
    """
    span = b - a
    m_full = int(np.floor(span / h + 1e-9))
    targets = [a + k * h for k in range(1, m_full + 1)]
    if not targets:
        return [b]
    if b - targets[-1] > 1e-6 * h:
        targets.append(b)
    else:
        targets[-1] = b
    return targets


def simulate(scenario: "ScenarioConfig") -> Trajectory:
    """Integrate the scenario's switched system over [t0, t_end].

    Steps never straddle a switching instant. Raises DivergenceError with the
    offending time if the state stops being finite. When the scenario declares
    a feasibility assumption, the validator runs over the accepted samples and
    its verdicts are attached to the returned trajectory.
    """
    spec: ProtocolSpec = scenario.protocol
    signal: SwitchingSignal = scenario.signal
    bad = validate_switching_signal(signal)
    if bad:
        raise DomainError(f"switching signal violates dwell time: {bad[0]}")
    h = float(scenario.h)
    if h <= 0:
        raise DomainError("step size h must be positive")
    t0 = signal.t0
    t_end = float(scenario.t_end)
    if t_end <= t0:
        raise DomainError("t_end must exceed the signal start")
    if t_end > signal.horizon_end and not signal.periodic:
        raise DomainError("t_end exceeds the horizon of an aperiodic signal")

    x = np.asarray(scenario.initial_states, dtype=float).reshape(-1).copy()
    if x.size != scenario.n * scenario.d:
        raise DomainError("initial states must have n*d entries")

    boundaries = [t0] + signal.switch_times_until(t_end) + [t_end]
    times = [t0]
    states = [x.copy()]
    for a, b in zip(boundaries[:-1], boundaries[1:]):
        if b <= a:
            continue
        p = signal.active_index(a)
        f = _bound_field(spec, p, scenario.d)
        t = a
        for target in _segment_targets(a, b, h):
            x = _rk4_step(f, x, target - t)
            t = target
            if not np.all(np.isfinite(x)):
                raise DivergenceError(t)
            times.append(t)
            states.append(x.copy())

    traj = Trajectory(
        times=np.asarray(times),
        states=np.vstack(states),
        n=scenario.n,
        d=scenario.d,
        active_index=[signal.active_index(t) for t in times],
    )
    if getattr(scenario, "assumption", None) is not None:
        violations = validate_feasibility(
            traj,
            spec,
            scenario.assumption,
            face_tolerance=scenario.face_tolerance,
            strictness_tolerance=scenario.strictness_tolerance,
        )
        flags = np.ones((traj.num_samples, traj.n), dtype=bool)
        sample_of_time = {t: s for s, t in enumerate(times)}
        for v in violations:
            flags[sample_of_time[v.time], v.agent - 1] = False
        traj.feasibility_flags = flags
        traj.feasibility_violations = violations
    return traj


def fields_along(traj: Trajectory, spec: ProtocolSpec) -> np.ndarray:
    """Active vector field evaluated at every sample, shaped (m, n, d)."""
    m = traj.num_samples
    X = traj.blocks()
    F = np.empty_like(X)
    for p in _distinct(traj.active_index):
        sel = np.fromiter(
            (s for s, q in enumerate(traj.active_index) if q == p), dtype=int
        )
        if spec.kind is ProtocolKind.CUSTOM:
            for s in sel:
                F[s] = spec.field(p, traj.states[s]).reshape(traj.n, traj.d)
        else:
            W, S, rs = spec._W[p], spec._S[p], spec._rowsum[p]
            Xs = X[sel]
            if spec.kind is ProtocolKind.SIGNED_CONSENSUS:
                base = np.einsum("ij,sjk->sik", W * S, Xs) - rs[None, :, None] * Xs
            else:
                base = np.einsum("ij,sjk->sik", W, Xs) - rs[None, :, None] * Xs
            if spec.kind is ProtocolKind.ROTATED_CONSENSUS:
                base = np.einsum("aij,saj->sai", spec._R, base)
            F[sel] = base
    return F


def _distinct(seq: Sequence) -> list:
    seen = []
    for item in seq:
        if item not in seen:
            seen.append(item)
    return seen


def _local_hull_bounds(
    X: np.ndarray, spec: ProtocolSpec, p: Any, signed: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent supporting-box bounds over the local hull, vectorized.

    X is (m, n, d); returns lo, hi of shape (m, n, d) where row i bounds the
    set {x_i} union {sign_ij x_j : j in N_i(p)}.
    """
    mask = spec.neighbor_mask(p)  # (n, n) incl. self
    if signed:
        sgn = spec.sign_matrix(p)
        cand = sgn[None, :, :, None] * X[:, None, :, :]  # (m, n, n, d)
    else:
        cand = np.broadcast_to(X[:, None, :, :], (X.shape[0], spec.n) + X.shape[1:])
    sel = mask[None, :, :, None]
    lo = np.where(sel, cand, np.inf).min(axis=2)
    hi = np.where(sel, cand, -np.inf).max(axis=2)
    return lo, hi


def validate_feasibility(
    traj: Trajectory,
    spec: ProtocolSpec,
    assumption: Assumption | str,
    *,
    gamma: float | None = None,
    face_tolerance: float = 0.0,
    strictness_tolerance: float = 1e-12,
) -> list[FeasibilityViolation]:
    """Check the cone condition at every sample and agent; violations as data.

    The default ``face_tolerance`` of zero is exact here: the queried point is
    itself a hull point, so facet membership reduces to exact min/max
    comparisons. The decision logic matches the scalar geometry predicates
    (see the equivalence tests); it is merely evaluated in bulk.
    """
    if isinstance(assumption, str):
        assumption = Assumption(assumption)
    gamma = spec.gamma if gamma is None else float(gamma)
    if gamma <= 0 and assumption is not Assumption.RELATIVE_INTERIOR:
        raise DomainError("gamma must be positive")
    ftol, stol = float(face_tolerance), float(strictness_tolerance)
    if ftol < 0 or stol < 0:
        raise DomainError("tolerances must be nonnegative")

    X = traj.blocks()
    F = fields_along(traj, spec)
    signed = assumption is Assumption.SIGNED_GAMMA_STRICT
    violations: list[FeasibilityViolation] = []
    for p in _distinct(traj.active_index):
        sel = np.fromiter(
            (s for s, q in enumerate(traj.active_index) if q == p), dtype=int
        )
        Xs, Fs = X[sel], F[sel]
        lo, hi = _local_hull_bounds(Xs, spec, p, signed)
        width = hi - lo
        at_lower = np.abs(Xs - lo) <= ftol
        at_upper = np.abs(Xs - hi) <= ftol
        degen = width <= 2 * ftol
        active = (at_lower | at_upper) & ~degen

        bad_degen = degen & (np.abs(Fs) > stol)
        if assumption is Assumption.RELATIVE_INTERIOR:
            bad_sign = active & (
                (at_lower & (Fs < stol)) | (at_upper & (Fs > -stol))
            )
            bad = bad_degen | bad_sign
            kinds = [(bad_degen, "carrier"), (bad_sign, "strict-sign")]
        else:
            bad_sign = active & (
                (at_lower & (Fs < -stol)) | (at_upper & (Fs > stol))
            )
            bad_margin = active & ~bad_sign & (np.abs(Fs) < gamma * width - stol)
            bad = bad_degen | bad_sign | bad_margin
            kinds = [
                (bad_degen, "carrier"),
                (bad_sign, "sign"),
                (bad_margin, "margin"),
            ]
        for s_loc, i, k in np.argwhere(bad):
            s = int(sel[s_loc])
            reason = next(name for arr, name in kinds if arr[s_loc, i, k])
            fval = Fs[s_loc, i, k]
            if reason == "carrier":
                detail = f"carrier subspace: |f_k|={abs(fval):.3g} > {stol:.3g} on a flat axis"
            elif reason in ("sign", "strict-sign"):
                side = "lower" if at_lower[s_loc, i, k] else "upper"
                detail = f"{reason}: f_k={fval:.3g} points outward at the {side} facet"
            else:
                need = gamma * width[s_loc, i, k]
                detail = f"margin: |f_k|={abs(fval):.3g} < gamma*D_k={need:.3g}"
            violations.append(
                FeasibilityViolation(
                    time=float(traj.times[s]),
                    agent=int(i) + 1,
                    axis=int(k) + 1,
                    active_p=p,
                    reason=detail,
                )
            )
    violations.sort(key=lambda v: (v.time, v.agent, v.axis))
    return violations


def empirical_gamma_margin(
    traj: Trajectory,
    spec: ProtocolSpec,
    *,
    signed: bool = False,
    face_tolerance: float = 0.0,
) -> float:
    """Smallest observed |f_k| / D_k over active non-degenerate facet axes.

    Measures the cone margin the trajectory actually exhibits; negative when
    the field points outward at some facet, +inf when no facet is ever
    active. No numeric slack is applied.
    """
    ftol = float(face_tolerance)
    X = traj.blocks()
    F = fields_along(traj, spec)
    best = np.inf
    for p in _distinct(traj.active_index):
        sel = np.fromiter(
            (s for s, q in enumerate(traj.active_index) if q == p), dtype=int
        )
        Xs, Fs = X[sel], F[sel]
        lo, hi = _local_hull_bounds(Xs, spec, p, signed)
        width = hi - lo
        degen = width <= 2 * ftol
        at_lower = np.abs(Xs - lo) <= ftol
        at_upper = np.abs(Xs - hi) <= ftol
        active = (at_lower | at_upper) & ~degen
        if not active.any():
            continue
        sign_ok = np.where(at_lower, Fs >= 0, Fs <= 0)
        margins = np.where(sign_ok, np.abs(Fs), -np.abs(Fs)) / np.where(
            active, width, 1.0
        )
        best = min(best, float(margins[active].min()))
    return best


def linear_system_matrix(spec: ProtocolSpec, p: Any, d: int) -> np.ndarray:
    """Stacked (n*d, n*d) matrix A with f_p(x) = A x, for the linear built-ins."""
    if spec.kind is ProtocolKind.CUSTOM:
        raise DomainError("custom protocols have no generic linear form")
    n = spec.n
    if spec.kind is ProtocolKind.ROTATED_CONSENSUS:
        if spec.rotation_dim != d:
            raise DomainError(f"rotation built for d={spec.rotation_dim}, not {d}")
    A = np.zeros((n * d, n * d))
    eye = np.eye(d)
    W, S = spec._W[p], spec._S[p]
    for i in range(n):
        Ri = spec._R[i] if spec.kind is ProtocolKind.ROTATED_CONSENSUS else eye
        for j in range(n):
            if W[i, j] <= 0:
                continue
            sij = S[i, j] if spec.kind is ProtocolKind.SIGNED_CONSENSUS else 1.0
            blk = W[i, j] * Ri
            A[i * d : (i + 1) * d, j * d : (j + 1) * d] += sij * blk
            A[i * d : (i + 1) * d, i * d : (i + 1) * d] -= blk
    return A


def linear_oracle_solution(
    system_matrix: np.ndarray,
    x0: np.ndarray,
    t: float,
    *,
    signal: SwitchingSignal | None = None,
    t_start: float | None = None,
) -> np.ndarray:
    """Matrix-exponential solution expm(A t) x0 of a constant linear system.

    When a switching signal is supplied, the queried interval must not contain
    a switching instant (the oracle only covers a constant active index).
    """
    A = np.asarray(system_matrix, dtype=float)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] != x0.size:
        raise DomainError("system matrix must be square and match x0")
    if t < 0:
        raise DomainError("oracle time must be nonnegative")
    if signal is not None:
        start = signal.t0 if t_start is None else float(t_start)
        if any(start < s < start + t for s in signal.switch_times_until(start + t)):
            raise OracleScopeError(
                f"switching occurs inside [{start}, {start + t}); the constant-"
                "matrix oracle does not apply"
            )
    return expm(A * t) @ x0
