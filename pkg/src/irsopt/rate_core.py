"""SINR, sum rate, per-user MSE and the penalized WMMSE objective.

Conventions: beamformers ``V`` are stored as a (K, M) array whose row k is
``v_k``; the phase vector ``theta`` has shape (N,). Rates are in nats.
"""

from __future__ import annotations

import numpy as np

from .model import ChannelRealization, effective_channels

__all__ = [
    "MSE_FLOOR",
    "gains",
    "sinr",
    "sinrs",
    "sum_rate",
    "mse",
    "mses",
    "phi_lambda",
    "total_power",
    "nats_to_bits",
]

MSE_FLOOR = 1e-300


def gains(V, theta, real: ChannelRealization) -> np.ndarray:
    """Matrix ``C[k, j] = h_k(theta)^H v_j``."""
    H = effective_channels(real, theta)
    return H.conj() @ np.asarray(V).T


def sinrs(V, theta, real: ChannelRealization, sigma2) -> np.ndarray:
    P = np.abs(gains(V, theta, real)) ** 2
    signal = np.diag(P)
    interference = P.sum(axis=1) - signal
    return signal / (np.asarray(sigma2, dtype=float) + interference)


def sinr(k: int, V, theta, real: ChannelRealization, sigma2) -> float:
    return float(sinrs(V, theta, real, sigma2)[k])


def sum_rate(V, theta, real: ChannelRealization, sigma2) -> float:
    """Sum of ``ln(1 + SINR_k)`` in nats."""
    return float(np.sum(np.log1p(sinrs(V, theta, real, sigma2))))


def nats_to_bits(x):
    return np.asarray(x) / np.log(2.0) if np.ndim(x) else float(x) / np.log(2.0)


def mses(u, V, theta, real: ChannelRealization, sigma2) -> np.ndarray:
    """Per-user MSE ``e_k(u_k, V)`` for all k."""
    u = np.asarray(u, dtype=complex)
    C = gains(V, theta, real)
    uc = u[:, None] * C
    diag = np.diag(uc)
    cross = np.sum(np.abs(uc) ** 2, axis=1) - np.abs(diag) ** 2
    return np.asarray(sigma2, dtype=float) * np.abs(u) ** 2 + np.abs(1.0 - diag) ** 2 + cross


def mse(k: int, u_k, V, theta, real: ChannelRealization, sigma2) -> float:
    u = np.zeros(real.K, complex)
    u[k] = u_k
    return float(mses(u, V, theta, real, sigma2)[k])


def phi_lambda(V, u, w, theta, lam: float, real: ChannelRealization, sigma2) -> float:
    """``sum_k (w_k e_k - ln w_k) - lam * ||theta||^2``; +inf if any w_k is 0."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ValueError("MSE weights must be nonnegative")
    if np.any(w == 0):
        return float("inf")
    e = np.maximum(mses(u, V, theta, real, sigma2), MSE_FLOOR)
    theta = np.asarray(theta)
    return float(np.sum(w * e - np.log(w)) - lam * np.vdot(theta, theta).real)


def total_power(V) -> float:
    V = np.asarray(V)
    return float(np.vdot(V, V).real)
