"""Agreement metrics, monotonicity monitors, and convergence-rate tools.

The central quantity is V(t), the maximum side length of the supporting
hyperrectangle of the agent states: V = max_k (M_k - m_k) with per-axis
maxima M_k and minima m_k over agents. Under a validated cooperative
protocol every M_k is non-increasing and every m_k non-decreasing, so V is a
Lyapunov function; the monitors flag sampled violations of those
monotonicity properties within a tolerance that absorbs integration error.

For signed (cooperative-antagonistic) dynamics the monitored quantity is
y_k = max_i x_ik^2, whose non-increase certifies the origin-symmetric
invariant box, and the agreement notion is per-axis equality of absolute
values.

``rate_bound`` evaluates the closed-form contraction factor per sweep,

    beta  = exp(-n L* T') * min{ (gamma tau_d)^(n-1) / (2 (L+ tau_d + 1)^(n-1)), 1/2 }
    beta* = ln(1 / (1 - beta)) / (d T')

with T' the sweep length (a convenience constructor builds it from a
connectivity window T as T' = n^2 (T + 2 tau_d)). The Lipschitz constants
L* and L+ are caller-supplied; they are existence constants that no generic
procedure can extract from a protocol, so the bound is exposed as a
calculator and never asserted against measured rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .errors import DomainError
from .dynamics import Trajectory


class MonitorMode(Enum):
    COOPERATIVE_BOX = "CooperativeBox"
    SIGNED_SQUARE = "SignedSquare"


# Per-sample series -----------------------------------------------------------


def max_series(traj: Trajectory) -> np.ndarray:
    """M_k(t): per-axis maxima over agents, shape (samples, d)."""
    return traj.blocks().max(axis=1)


def min_series(traj: Trajectory) -> np.ndarray:
    """m_k(t): per-axis minima over agents, shape (samples, d)."""
    return traj.blocks().min(axis=1)


def diameters_series(traj: Trajectory) -> np.ndarray:
    """D_k(t) = M_k - m_k, shape (samples, d)."""
    return max_series(traj) - min_series(traj)


def lyapunov_series(traj: Trajectory) -> np.ndarray:
    """V(t): maximum side length of the supporting box of the agent states."""
    return diameters_series(traj).max(axis=1)


def abs_max_series(traj: Trajectory) -> np.ndarray:
    """Per-axis max_i |x_ik|, shape (samples, d)."""
    return np.abs(traj.blocks()).max(axis=1)


def square_max_series(traj: Trajectory) -> np.ndarray:
    """y_k(t) = max_i x_ik^2, shape (samples, d)."""
    return (traj.blocks() ** 2).max(axis=1)


def abs_spread_series(traj: Trajectory) -> np.ndarray:
    """Per-axis max_i |x_ik| - min_i |x_ik|, shape (samples, d)."""
    a = np.abs(traj.blocks())
    return a.max(axis=1) - a.min(axis=1)


def default_tol_monotone(traj: Trajectory) -> float:
    """Scale-relative monotonicity tolerance: 1e-8 * max(1, V(t0))."""
    v0 = float(lyapunov_series(traj)[0])
    return 1e-8 * max(1.0, v0)


@dataclass(frozen=True)
class MonitorViolation:
    """A sampled breach of a monotone invariant."""

    sample: int
    time: float
    axis: int
    kind: str
    excess: float

    def __str__(self) -> str:
        return (
            f"sample {self.sample} (t={self.time:.6g}) axis {self.axis}: "
            f"{self.kind} moved outward by {self.excess:.3g}"
        )


def monotonicity_monitor(
    traj: Trajectory,
    mode: MonitorMode | str,
    tol_monotone: float | None = None,
) -> list[MonitorViolation]:
    """Flag samples where a monotone invariant moved the wrong way.

    CooperativeBox: any per-axis maximum increasing or minimum decreasing
    between consecutive samples by more than the tolerance. SignedSquare: any
    increase of y_k = max_i x_ik^2 beyond the tolerance.
    """
    if isinstance(mode, str):
        mode = MonitorMode(mode)
    tol = default_tol_monotone(traj) if tol_monotone is None else float(tol_monotone)
    violations: list[MonitorViolation] = []
    if mode is MonitorMode.COOPERATIVE_BOX:
        checks = [(max_series(traj), 1.0, "M_k"), (min_series(traj), -1.0, "m_k")]
    else:
        checks = [(square_max_series(traj), 1.0, "y_k")]
    for series, direction, name in checks:
        drift = direction * np.diff(series, axis=0)
        for s, k in np.argwhere(drift > tol):
            violations.append(
                MonitorViolation(
                    sample=int(s) + 1,
                    time=float(traj.times[s + 1]),
                    axis=int(k) + 1,
                    kind=name,
                    excess=float(drift[s, k]),
                )
            )
    violations.sort(key=lambda v: (v.sample, v.axis, v.kind))
    return violations


# Rate estimation -------------------------------------------------------------

FIT_FLOOR = 1e-14


@dataclass(frozen=True)
class RateFit:
    """Log-linear tail fit of a decaying series; unpacks as (lambda_hat, r2)."""

    lambda_hat: float
    r_squared: float
    truncated: bool = False
    samples_used: int = 0

    def __iter__(self) -> Iterator[float]:
        return iter((self.lambda_hat, self.r_squared))


def fit_exponential_rate(
    series: tuple[Sequence[float], Sequence[float]] | np.ndarray,
    tail_fraction: float = 0.5,
) -> RateFit:
    """Least-squares slope of log V over the tail window; lambda = -slope.

    ``series`` is (times, values) or an (m, 2) array. Values at or below the
    numerical floor truncate the fit there (flagged in the result). A constant
    series fits exactly with rate zero.
    """
    if isinstance(series, np.ndarray) and series.ndim == 2:
        t, v = series[:, 0], series[:, 1]
    else:
        t, v = series
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if t.shape != v.shape or t.ndim != 1 or t.size < 2:
        raise DomainError("need matching 1-D times and values with >= 2 samples")
    if not 0 < tail_fraction <= 1:
        raise DomainError("tail_fraction must be in (0, 1]")
    start = t.size - max(2, int(math.ceil(tail_fraction * t.size)))
    t, v = t[start:], v[start:]
    truncated = False
    below = np.nonzero(v <= FIT_FLOOR)[0]
    if below.size:
        truncated = True
        t, v = t[: below[0]], v[: below[0]]
    if t.size < 2:
        raise DomainError("tail has fewer than 2 samples above the floor")
    logv = np.log(v)
    slope, intercept = np.polyfit(t, logv, 1)
    resid = logv - (slope * t + intercept)
    ss_res = float(resid @ resid)
    centered = logv - logv.mean()
    ss_tot = float(centered @ centered)
    # Variation at rounding level means the fit is exact for all purposes.
    rounding = (1e-12 * max(1.0, float(np.abs(logv).max()))) ** 2 * logv.size
    r2 = 1.0 if ss_tot <= rounding else 1.0 - ss_res / ss_tot
    return RateFit(
        lambda_hat=float(-slope),
        r_squared=r2,
        truncated=truncated,
        samples_used=int(t.size),
    )


# Agreement verdicts -----------------------------------------------------------


@dataclass(frozen=True)
class AgreementVerdict:
    """Whether V settled below a threshold, and the first time it stayed there."""

    achieved: bool
    epsilon: float
    time: float | None
    final_value: float

    def __bool__(self) -> bool:
        return self.achieved


def agreement_verdict(traj: Trajectory, eps: float) -> AgreementVerdict:
    """True iff V at the final sample is within eps; reports the first time
    V drops below eps and never exceeds it again through the horizon."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    v = lyapunov_series(traj)
    if v[-1] > eps:
        return AgreementVerdict(False, eps, None, float(v[-1]))
    above = np.nonzero(v > eps)[0]
    hit = 0 if above.size == 0 else int(above[-1]) + 1
    return AgreementVerdict(True, eps, float(traj.times[hit]), float(v[-1]))


def absolute_value_agreement(
    traj: Trajectory,
    tol: float,
    tol_monotone: float | None = None,
    tail_fraction: float = 0.5,
) -> np.ndarray:
    """Per-axis verdicts that agents agree in absolute value.

    Axis k passes iff the final spread of |x_ik| is within ``tol`` and the
    per-axis envelope max_i |x_ik| is non-increasing (within ``tol_monotone``)
    over the tail window. The envelope, not the spread itself, is the
    monotone quantity: rotating dynamics make the spread oscillate on its way
    to zero, while the envelope shrinks whenever the signed cone condition
    holds, so it is the sound guard against a lucky final dip.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    tol_m = default_tol_monotone(traj) if tol_monotone is None else float(tol_monotone)
    spread = abs_spread_series(traj)
    envelope = abs_max_series(traj)
    start = spread.shape[0] - max(2, int(math.ceil(tail_fraction * spread.shape[0])))
    tail = envelope[max(start, 0):]
    final_ok = spread[-1] <= tol
    monotone_ok = (np.diff(tail, axis=0) <= tol_m).all(axis=0)
    return final_ok & monotone_ok


# Contraction-rate bound -------------------------------------------------------


@dataclass(frozen=True)
class RateBound:
    """Per-sweep contraction factor and the exponential rate it implies."""

    beta: float
    beta_star: float

    def __iter__(self) -> Iterator[float]:
        return iter((self.beta, self.beta_star))


def t_bar_from_window(n: int, T: float, tau_d: float) -> float:
    """Sweep length n^2 (T + 2 tau_d) from a connectivity window and dwell time."""
    if n < 2:
        raise DomainError("need at least 2 agents")
    if T <= 0 or tau_d <= 0:
        raise DomainError("T and tau_d must be positive")
    return n * n * (T + 2.0 * tau_d)


def rate_bound(
    n: int,
    d: int,
    T_bar: float,
    gamma: float,
    tau_d: float,
    L_star: float,
    L_plus: float,
) -> RateBound:
    """Closed-form (beta, beta*) for the given sweep length and constants."""
    if n < 2:
        raise DomainError("need at least 2 agents")
    if d < 1:
        raise DomainError("dimension must be positive")
    for name, val in (
        ("T_bar", T_bar),
        ("gamma", gamma),
        ("tau_d", tau_d),
        ("L_star", L_star),
        ("L_plus", L_plus),
    ):
        if val <= 0:
            raise DomainError(f"{name} must be positive")
    shrink = (gamma * tau_d) ** (n - 1) / (2.0 * (L_plus * tau_d + 1.0) ** (n - 1))
    beta = math.exp(-n * L_star * T_bar) * min(shrink, 0.5)
    # ln(1/(1-beta)) via log1p so tiny beta does not round to zero.
    beta_star = -math.log1p(-beta) / (d * T_bar)
    return RateBound(beta=beta, beta_star=beta_star)


# Aggregate report -------------------------------------------------------------


@dataclass(eq=False)
class AgreementReport:
    """Everything the CLI serializes about one trajectory."""

    times: np.ndarray
    lyapunov: np.ndarray
    diameters: np.ndarray
    axis_max: np.ndarray
    axis_min: np.ndarray
    abs_max: np.ndarray
    square_max: np.ndarray
    abs_spread: np.ndarray
    lambda_hat: float | None
    r_squared: float | None
    fit_truncated: bool
    agreement: AgreementVerdict
    abs_agreement: np.ndarray
    monitor_mode: MonitorMode | None
    monitor_violations: list[MonitorViolation] = field(default_factory=list)
    feasibility_violations: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "V": self.lyapunov.tolist(),
            "diameters": self.diameters.tolist(),
            "abs_spread": self.abs_spread.tolist(),
            "lambda_hat": self.lambda_hat,
            "r2": self.r_squared,
            "fit_truncated": self.fit_truncated,
            "verdicts": {
                "agreement": self.agreement.achieved,
                "agreement_eps": self.agreement.epsilon,
                "agreement_time": self.agreement.time,
                "final_V": self.agreement.final_value,
                "abs_agreement_per_axis": [bool(b) for b in self.abs_agreement],
            },
            "violations": {
                "monitor": [str(v) for v in self.monitor_violations],
                "feasibility": [str(v) for v in self.feasibility_violations],
            },
        }


def build_report(
    traj: Trajectory,
    eps_agreement: float = 1e-6,
    monitor_mode: MonitorMode | str | None = None,
    tol_monotone: float | None = None,
    tail_fraction: float = 0.5,
    abs_tol: float | None = None,
) -> AgreementReport:
    """Compute the full metric set for a trajectory."""
    v = lyapunov_series(traj)
    lam: float | None
    try:
        fit = fit_exponential_rate((traj.times, v), tail_fraction)
        lam, r2, truncated = fit.lambda_hat, fit.r_squared, fit.truncated
    except DomainError:
        lam, r2, truncated = None, None, True
    mode = MonitorMode(monitor_mode) if isinstance(monitor_mode, str) else monitor_mode
    return AgreementReport(
        times=traj.times,
        lyapunov=v,
        diameters=diameters_series(traj),
        axis_max=max_series(traj),
        axis_min=min_series(traj),
        abs_max=abs_max_series(traj),
        square_max=square_max_series(traj),
        abs_spread=abs_spread_series(traj),
        lambda_hat=lam,
        r_squared=r2,
        fit_truncated=truncated,
        agreement=agreement_verdict(traj, eps_agreement),
        abs_agreement=absolute_value_agreement(
            traj, abs_tol if abs_tol is not None else eps_agreement, tol_monotone
        ),
        monitor_mode=mode,
        monitor_violations=(
            monotonicity_monitor(traj, mode, tol_monotone) if mode else []
        ),
        feasibility_violations=list(traj.feasibility_violations or []),
    )
