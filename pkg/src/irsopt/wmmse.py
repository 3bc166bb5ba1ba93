"""WMMSE block updates for the beamformer subproblem (theta held fixed)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ChannelRealization, effective_channels
from .rate_core import MSE_FLOOR, mses, phi_lambda

__all__ = [
    "InnerResult",
    "update_u",
    "update_w",
    "update_v",
    "solve_power_multiplier",
    "matched_filter",
    "solve_inner",
]


def update_u(V, theta, real: ChannelRealization, sigma2) -> np.ndarray:
    """MMSE receive equalizers ``u_k = conj(h_k^H v_k) / (sigma_k^2 + sum_j |h_k^H v_j|^2)``.

    The conjugate makes ``u_k`` the exact minimizer of ``e_k`` as written in
    :func:`irsopt.rate_core.mses` (with ``|1 - u_k h_k^H v_k|^2``).
    """
    H = effective_channels(real, theta)
    C = H.conj() @ np.asarray(V).T
    return np.diag(C).conj() / (np.asarray(sigma2, dtype=float) + np.sum(np.abs(C) ** 2, axis=1))


def update_w(u, V, theta, real: ChannelRealization, sigma2) -> np.ndarray:
    return 1.0 / np.maximum(mses(u, V, theta, real, sigma2), MSE_FLOOR)


def solve_power_multiplier(eigvals, weights, p_max, rtol=1e-13, max_steps=200):
    """Smallest ``mu >= 0`` with ``sum_i weights_i / (eigvals_i + mu)^2 <= p_max``.

    ``weights`` must already be zero on the null space of the Hermitian
    matrix (where ``eigvals`` is zero). Returns ``(mu, power(mu))``. The
    bracket is grown by doubling from 1, then bisected until the relative
    bracket width drops below ``rtol``; the upper (feasible) end is returned.
    """
    def power(mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(weights > 0, weights / (eigvals + mu) ** 2, 0.0)
        return float(np.sum(terms))

    p0 = power(0.0)
    if p0 <= p_max:
        return 0.0, p0
    lo, hi = 0.0, 1.0
    p_hi = power(hi)
    while p_hi > p_max:
        lo, hi = hi, 2.0 * hi
        p_hi = power(hi)
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        p_mid = power(mid)
        if p_mid > p_max:
            lo = mid
        else:
            hi, p_hi = mid, p_mid
        if hi - lo <= rtol * hi or abs(p_hi - p_max) <= rtol * p_max:
            break
    return hi, p_hi


def update_v(u, w, theta, real: ChannelRealization, sigma2, p_max: float, return_mu: bool = False):
    """Power-constrained minimizer of ``sum_k w_k e_k`` over the beamformers.

    ``v_k = conj(u_k) w_k (sum_j w_j |u_j|^2 h_j h_j^H + mu I)^{-1} h_k`` with the
    multiplier ``mu`` from bisection. The Hermitian matrix is diagonalized
    once so every bisection trial is a cheap scalar sum.
    """
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=float)
    H = effective_channels(real, theta)
    K, M = H.shape
    coef = w * np.abs(u) ** 2
    if not np.any(coef > 0):
        V = np.zeros((K, M), complex)
        return (V, 0.0) if return_mu else V

    B = H.T @ (coef[:, None] * H.conj())
    B = 0.5 * (B + B.conj().T)
    lam, Q = np.linalg.eigh(B)
    null = lam <= M * np.finfo(float).eps * max(lam[-1], 0.0)
    lam = np.where(null, 0.0, lam)

    R = (u.conj() * w)[:, None] * H  # rows conj(u_k) w_k h_k
    S = R @ Q.conj()  # row k holds Q^H r_k
    S[:, null] = 0.0  # r_k lies in range(B)
    weights = np.sum(np.abs(S) ** 2, axis=0)
    mu, _ = solve_power_multiplier(lam, weights, p_max)

    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(null & (mu == 0.0), 0.0, 1.0 / (lam + mu))
    V = (S * scale[None, :]) @ Q.T
    return (V, mu) if return_mu else V


def matched_filter(real: ChannelRealization, theta, p_max: float) -> np.ndarray:
    """``v_k`` proportional to ``h_k(theta)``, scaled to total power ``p_max``."""
    H = effective_channels(real, theta)
    nrm = np.linalg.norm(H)
    if nrm == 0:
        return np.zeros_like(H)
    return H * (np.sqrt(p_max) / nrm)


@dataclass
class InnerResult:
    V: np.ndarray
    u: np.ndarray
    w: np.ndarray
    cycles: int
    trace: list[float] = field(default_factory=list)


def solve_inner(V, u, w, theta, real: ChannelRealization, sigma2, p_max: float,
                lam: float = 0.0, tol: float = 1e-6, max_cycles: int = 100,
                record_updates: bool = False) -> InnerResult:
    """Cyclic u -> w -> V updates until the relative change of phi drops below ``tol``.

    ``trace`` starts with phi at the given state and then holds phi after
    each cycle, or after every single block update when ``record_updates``.
    """
    V = np.asarray(V, dtype=complex)
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=float)

    def phi():
        return phi_lambda(V, u, w, theta, lam, real, sigma2)

    prev = phi()
    trace = [prev]
    cycles = 0
    for cycles in range(1, max_cycles + 1):
        u = update_u(V, theta, real, sigma2)
        if record_updates:
            trace.append(phi())
        w = update_w(u, V, theta, real, sigma2)
        if record_updates:
            trace.append(phi())
        V = update_v(u, w, theta, real, sigma2, p_max)
        cur = phi()
        trace.append(cur)
        if not np.isfinite(cur):
            break
        if abs(prev - cur) <= tol * max(abs(cur), 1.0):
            break
        prev = cur
    return InnerResult(V=V, u=u, w=w, cycles=cycles, trace=trace)
