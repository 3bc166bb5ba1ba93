"""Reference schemes and brute-force oracles.

``no_irs_wmmse`` and ``quantize_baseline`` are the comparison schemes of the
experiments; ``exhaustive_discrete``, ``polygon_projection_oracle`` and
``fd_gradient`` are slow independent checks used by the test suite and the
``verify`` command.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .model import ChannelRealization, PhaseAlphabet, SystemConfig
from .phase_solver import alphabet_distance
from .rate_core import sum_rate
from .solver import (PenaltySchedule, SolveReport, SolverOptions, TraceRow, _refit,
                     snap_to_alphabet, solve)
from .wmmse import matched_filter, solve_inner, update_u, update_w

__all__ = [
    "no_irs_wmmse",
    "quantize_baseline",
    "exhaustive_discrete",
    "wmmse_rate",
    "fd_gradient",
    "polygon_projection_oracle",
    "project_polygon_literal",
    "segment_projection",
]

MAX_ENUMERATION = 10 ** 6


def no_irs_wmmse(config: SystemConfig, real: ChannelRealization,
                 schedule: PenaltySchedule | None = None,
                 opts: SolverOptions | None = None) -> SolveReport:
    """Plain WMMSE on the direct channels only (the solver with N = 0)."""
    cfg = config.replace(N=0)
    return solve(cfg, real.without_irs(), schedule, opts, theta0=np.zeros(0, complex))


def quantize_baseline(continuous: SolveReport, levels: int, real: ChannelRealization,
                      config: SystemConfig, opts: SolverOptions | None = None) -> SolveReport:
    """Snap a continuous-phase solution to the L-ary alphabet and refit the beamformers.

    When snapping leaves theta unchanged (e.g. N = 0) the continuous
    solution is returned as is, so the baseline coincides with it exactly.
    """
    opts = opts or SolverOptions()
    start = time.perf_counter()
    alphabet = PhaseAlphabet(levels)
    theta = snap_to_alphabet(continuous.theta, alphabet)
    if np.array_equal(theta, continuous.theta):
        V, phi = continuous.V, continuous.trace[-1].phi
    else:
        inner = _refit(continuous.V, theta, real, config, opts)
        V, phi = inner.V, inner.trace[-1]
    rate = sum_rate(V, theta, real, config.noise)
    row = TraceRow(0, 0.0, phi, rate, alphabet_distance(theta, alphabet))
    return SolveReport(V=V, theta=theta, sum_rate=rate, trace=[row], iterations=0,
                       termination="quantized", wall_time=time.perf_counter() - start,
                       theta_relaxed=continuous.theta, alphabet=alphabet)


def wmmse_rate(theta, real: ChannelRealization, config: SystemConfig,
               tol: float = 1e-8, max_cycles: int = 1000) -> tuple[float, np.ndarray]:
    """WMMSE from a matched-filter start at fixed theta; returns ``(rate, V)``."""
    sigma2 = config.noise
    V = matched_filter(real, theta, config.p_max)
    u = update_u(V, theta, real, sigma2)
    w = update_w(u, V, theta, real, sigma2)
    res = solve_inner(V, u, w, theta, real, sigma2, config.p_max, 0.0, tol, max_cycles)
    return sum_rate(res.V, theta, real, sigma2), res.V


def exhaustive_discrete(config: SystemConfig, real: ChannelRealization, levels: int,
                        tol: float = 1e-8, max_cycles: int = 1000):
    """Best WMMSE rate over every theta in the L-ary alphabet, in lexicographic order.

    Returns ``(theta_best, rate_best)``; the first candidate wins ties.
    """
    N = real.N
    if levels ** N > MAX_ENUMERATION:
        raise ValueError(f"L^N = {levels}^{N} exceeds the enumeration limit {MAX_ENUMERATION}")
    pts = PhaseAlphabet(levels).points
    best_theta, best_rate = None, -math.inf
    for idx in itertools.product(range(levels), repeat=N):
        theta = pts[list(idx)]
        rate, _ = wmmse_rate(theta, real, config, tol, max_cycles)
        if rate > best_rate:
            best_theta, best_rate = theta, rate
    return best_theta, best_rate


def fd_gradient(value_fn, point, step: float = 1e-6) -> np.ndarray:
    """Central differences of a real function of a complex vector.

    Returns ``d/dRe + 1j * d/dIm`` per coordinate.
    """
    point = np.asarray(point, dtype=complex)
    grad = np.empty_like(point)
    for n in range(point.size):
        e = np.zeros_like(point)
        e[n] = step
        d_re = (value_fn(point + e) - value_fn(point - e)) / (2 * step)
        e[n] = 1j * step
        d_im = (value_fn(point + e) - value_fn(point - e)) / (2 * step)
        grad[n] = d_re + 1j * d_im
    return grad


def segment_projection(z: complex, a: complex, b: complex) -> complex:
    d = b - a
    t = ((z - a) * np.conj(d)).real / (abs(d) ** 2)
    return a + min(max(t, 0.0), 1.0) * d


def polygon_projection_oracle(z: complex, levels: int) -> complex:
    """Nearest point of the L-gon hull by checking every vertex and edge.

    Points inside the hull are returned unchanged (half-plane test).
    """
    pts = PhaseAlphabet(levels).points
    z = complex(z)
    if levels == 2:
        return segment_projection(z, pts[1], pts[0])
    # inside iff on the inner side of every edge (counter-clockwise ordering)
    inside = True
    for l in range(levels):
        a, b = pts[l], pts[(l + 1) % levels]
        cross = (b - a).real * (z - a).imag - (b - a).imag * (z - a).real
        if cross < 0:
            inside = False
            break
    if inside:
        return z
    cands = list(pts)
    cands += [segment_projection(z, pts[l], pts[(l + 1) % levels]) for l in range(levels)]
    dist = [abs(z - c) for c in cands]
    return complex(cands[int(np.argmin(dist))])


def project_polygon_literal(z, levels: int):
    """The sector/clamp formula taken verbatim, kept only as a known-bad reference.

    Its clamp box describes a polygon whose edge midpoint (not a vertex)
    faces angle 0, so for the alphabet ``{exp(2j*pi*l/L)}`` it can return
    points outside the hull, e.g. z=2, L=4 gives cos(pi/4).
    """
    z = np.asarray(z, dtype=complex)
    step = 2 * np.pi / levels
    m = np.floor((np.angle(z) + np.pi / levels) / step)
    rot = np.exp(1j * m * step)
    t = z / rot
    re = np.clip(t.real, 0.0, math.cos(np.pi / levels))
    im = np.clip(t.imag, -math.sin(np.pi / levels), math.sin(np.pi / levels))
    return rot * (re + 1j * im)
