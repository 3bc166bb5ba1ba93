"""Joint beamformer / phase-shift optimization with an increasing penalty.

Each outer iteration runs a WMMSE solve with theta fixed, then a GEMM solve
for theta with (V, u, w) fixed, then grows the penalty every ``stage_len``
iterations. After termination the relaxed theta is snapped onto the
alphabet and the beamformers are refit.

The exact-penalty threshold guaranteeing equivalence with the discrete
problem depends on a Lipschitz constant of the coupled objective that is
never evaluated here; the geometric schedule stands in for it.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .model import ChannelRealization, PhaseAlphabet, SystemConfig, effective_channels
from .phase_solver import alphabet_distance, assemble_quadratic, gemm_solve, project
from .rate_core import phi_lambda, sum_rate
from .wmmse import matched_filter, solve_inner, update_u, update_w

__all__ = [
    "PenaltySchedule",
    "SolverOptions",
    "TraceRow",
    "SolveReport",
    "SolverError",
    "initial_theta",
    "snap_to_alphabet",
    "uses_continuous_start",
    "finalize",
    "solve",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Raised when the objective becomes non-finite."""


@dataclass(frozen=True)
class PenaltySchedule:
    lambda0: float = 0.01
    growth: float = 5.0
    stage_len: int = 5
    lambda_cap: float | None = 1e6

    def __post_init__(self):
        if self.lambda0 <= 0 or self.growth <= 1 or self.stage_len < 1:
            raise ValueError(f"invalid penalty schedule {self}")

    def value(self, t: int) -> float:
        """Penalty used in outer iteration ``t`` (1-based)."""
        lam = self.lambda0 * self.growth ** ((t - 1) // self.stage_len)
        if self.lambda_cap is not None:
            lam = min(lam, self.lambda_cap)
        return lam


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rules and algorithm switches.

    ``init`` is one of ``"auto"`` (random for the circle, continuous-phase
    warm start for discrete alphabets), ``"random"``, ``"center"`` or
    ``"continuous"``; ``warm_start`` keeps (V, u, w) across outer iterations.
    """

    max_outer: int = 30
    outer_tol: float = 1e-4
    inner_tol: float = 1e-6
    max_inner: int = 100
    gemm_eps: float = 1e-5
    gemm_max_iter: int = 500
    exact_mm: bool = False
    momentum: str = "printed"
    warm_start: bool = True
    init: str = "auto"

    def __post_init__(self):
        if self.init not in ("auto", "random", "center", "continuous"):
            raise ValueError(f"unknown init policy {self.init!r}")
        if self.momentum not in ("printed", "fista"):
            raise ValueError(f"unknown momentum rule {self.momentum!r}")


@dataclass
class TraceRow:
    iteration: int
    lam: float
    phi: float
    sum_rate: float
    infeasibility: float


@dataclass
class SolveReport:
    V: np.ndarray
    theta: np.ndarray
    sum_rate: float
    trace: list[TraceRow]
    iterations: int
    termination: str
    wall_time: float
    theta_relaxed: np.ndarray | None = None
    alphabet: PhaseAlphabet = field(default_factory=PhaseAlphabet)

    @property
    def sum_rate_bits(self) -> float:
        return self.sum_rate / math.log(2.0)

    @property
    def relaxed_infeasibility(self) -> float:
        """Distance from the alphabet of the last pre-finalize iterate."""
        return self.trace[-1].infeasibility


def initial_theta(N: int, alphabet: PhaseAlphabet, rng: np.random.Generator,
                  policy: str = "auto") -> np.ndarray:
    """Starting phase vector.

    ``"random"``: uniform phases on the unit circle projected onto the
    relaxed set. ``"center"``: the all-zero vector (centre of every hull).
    ``"continuous"`` (and ``"auto"`` for discrete alphabets) starts from the
    continuous-phase solution and is resolved inside :func:`solve`; here it
    falls back to ``"random"``. ``"auto"`` is random for the circle.
    """
    if policy in ("auto", "continuous"):
        policy = "random"
    if policy == "center":
        return np.zeros(N, complex)
    if policy == "random":
        return project(np.exp(2j * np.pi * rng.uniform(size=N)), alphabet)
    raise ValueError(f"unknown init policy {policy!r}")


def uses_continuous_start(opts: SolverOptions, alphabet: PhaseAlphabet, N: int) -> bool:
    """Whether :func:`solve` warm-starts from the continuous-phase solution."""
    return alphabet.is_discrete and N > 0 and opts.init in ("auto", "continuous")


def snap_to_alphabet(theta, alphabet: PhaseAlphabet) -> np.ndarray:
    """Nearest alphabet point per coordinate (lowest index wins ties; 0 maps to 1 on the circle)."""
    theta = np.asarray(theta, dtype=complex)
    if alphabet.is_discrete:
        pts = alphabet.points
        idx = np.argmin(np.abs(theta[:, None] - pts[None, :]), axis=1)
        return pts[idx]
    mag = np.abs(theta)
    return np.where(mag > 0, theta / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


def _refit(V, theta, real, config: SystemConfig, opts: SolverOptions):
    sigma2 = config.noise
    u = update_u(V, theta, real, sigma2)
    w = update_w(u, V, theta, real, sigma2)
    return solve_inner(V, u, w, theta, real, sigma2, config.p_max, 0.0,
                       opts.inner_tol, opts.max_inner)


def finalize(theta_relaxed, alphabet: PhaseAlphabet, V, real: ChannelRealization,
             config: SystemConfig, opts: SolverOptions | None = None):
    """Snap theta onto the alphabet, refit the beamformers, return ``(theta, V, rate)``."""
    opts = opts or SolverOptions()
    theta = snap_to_alphabet(theta_relaxed, alphabet)
    inner = _refit(V, theta, real, config, opts)
    return theta, inner.V, sum_rate(inner.V, theta, real, config.noise)


def solve(config: SystemConfig, real: ChannelRealization,
          schedule: PenaltySchedule | None = None, opts: SolverOptions | None = None,
          rng: np.random.Generator | None = None, theta0=None, V0=None,
          continuous: SolveReport | None = None) -> SolveReport:
    """Run the penalized alternating optimization on one channel realization.

    ``theta0`` defaults to :func:`initial_theta` under ``opts.init`` (random
    draws come from ``rng``, seed 0 if omitted) and ``V0`` to matched
    filters at ``theta0`` with full power.

    For discrete alphabets ``init="continuous"`` starts from the
    continuous-phase solution of the same channel (solved here from a random
    start unless passed as ``continuous``), and the default ``"auto"`` runs
    both that start and the centre start and keeps the higher final rate
    (the centre start wins exact ties).
    """
    schedule = schedule or PenaltySchedule()
    opts = opts or SolverOptions()
    alphabet = config.alphabet
    start = time.perf_counter()
    rng = rng if rng is not None else np.random.default_rng(0)

    if theta0 is None and uses_continuous_start(opts, alphabet, real.N):
        if continuous is None:
            continuous = solve(config.replace(alphabet=PhaseAlphabet()), real, schedule,
                               replace(opts, init="random"), rng=rng)
        best = _solve_from(config, real, schedule, opts, continuous.theta, continuous.V)
        if opts.init == "auto":
            cold = _solve_from(config, real, schedule, opts, np.zeros(real.N, complex), None)
            if cold.sum_rate >= best.sum_rate:
                best = cold
        best.wall_time = time.perf_counter() - start
        return best

    if theta0 is None:
        theta0 = initial_theta(real.N, alphabet, rng, opts.init)
    return _solve_from(config, real, schedule, opts, theta0, V0)


def _solve_from(config: SystemConfig, real: ChannelRealization, schedule: PenaltySchedule,
                opts: SolverOptions, theta0, V0) -> SolveReport:
    alphabet = config.alphabet
    sigma2 = config.noise
    start = time.perf_counter()
    theta = project(np.asarray(theta0, dtype=complex), alphabet)
    V = matched_filter(real, theta, config.p_max) if V0 is None else np.asarray(V0, complex)
    u = update_u(V, theta, real, sigma2)
    w = update_w(u, V, theta, real, sigma2)

    lam = schedule.value(1)
    phi0 = phi_lambda(V, u, w, theta, lam, real, sigma2)
    if not math.isfinite(phi0):
        raise SolverError("objective is non-finite at the starting point")
    trace = [TraceRow(0, lam, phi0,
                      sum_rate(V, theta, real, sigma2), alphabet_distance(theta, alphabet))]
    termination = "max_outer"
    t = 0
    for t in range(1, opts.max_outer + 1):
        lam = schedule.value(t)
        V_prev, theta_prev = V, theta

        if not opts.warm_start:
            V = matched_filter(real, theta, config.p_max)
            u = update_u(V, theta, real, sigma2)
            w = update_w(u, V, theta, real, sigma2)
        inner = solve_inner(V, u, w, theta, real, sigma2, config.p_max, lam,
                            opts.inner_tol, opts.max_inner)
        V, u, w = inner.V, inner.u, inner.w

        if real.N > 0:
            qf = assemble_quadratic(V, u, w, real, sigma2)
            res = gemm_solve(qf, lam, theta, alphabet, eps=opts.gemm_eps,
                             max_iter=opts.gemm_max_iter, exact_mm=opts.exact_mm,
                             momentum=opts.momentum)
            theta = res.theta

        phi = phi_lambda(V, u, w, theta, lam, real, sigma2)
        if not math.isfinite(phi):
            raise SolverError(f"objective became non-finite at outer iteration {t} (lambda={lam:g})")
        trace.append(TraceRow(t, lam, phi, sum_rate(V, theta, real, sigma2),
                              alphabet_distance(theta, alphabet)))

        change = (np.linalg.norm(V - V_prev) ** 2 + np.linalg.norm(theta - theta_prev) ** 2)
        log.debug("iter %d lam=%.3g phi=%.6g change=%.3g", t, lam, phi, change)
        if change < opts.outer_tol:
            termination = "tolerance"
            break

    theta_relaxed = theta
    theta_f, V_f, rate = finalize(theta, alphabet, V, real, config, opts)
    return SolveReport(V=V_f, theta=theta_f, sum_rate=rate, trace=trace, iterations=t,
                       termination=termination, wall_time=time.perf_counter() - start,
                       theta_relaxed=theta_relaxed, alphabet=alphabet)
