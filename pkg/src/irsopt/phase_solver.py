"""Phase-shift subproblem: penalized quadratic over the relaxed alphabet.

Minimizes ``f(theta) = theta^H A theta + 2 Re(b^H theta) - lam ||theta||^2``
over ``theta_n`` in the convex hull of the phase alphabet, by gradient
extrapolated majorization-minimization (one accelerated projected-gradient
step per linearization of the concave penalty).

Gradients use the conjugate-Wirtinger convention scaled by 2, which equals
``df/dRe + 1j * df/dIm`` on the real parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ChannelRealization, PhaseAlphabet, effective_channels

__all__ = [
    "QuadraticForm",
    "GemmResult",
    "assemble_quadratic",
    "quad_value",
    "penalized_value",
    "surrogate_value",
    "surrogate_gradient",
    "project_disk",
    "project_polygon",
    "project",
    "hull_distance",
    "alphabet_distance",
    "momentum_weights",
    "lipschitz_estimate",
    "gemm_solve",
]


@dataclass(frozen=True)
class QuadraticForm:
    A: np.ndarray
    b: np.ndarray
    c0: float

    def value(self, theta) -> float:
        """``theta^H A theta + 2 Re(b^H theta) + c0``."""
        return quad_value(self, theta) + self.c0


def assemble_quadratic(V, u, w, real: ChannelRealization, sigma2) -> QuadraticForm:
    """Expand ``sum_k w_k e_k(u_k, V)`` as a quadratic in theta.

    With ``c_kj = h_d,k^H v_j`` and ``g_kj = H_r,k^H v_j``:

        A  = sum_k w_k |u_k|^2 sum_j g_kj g_kj^H
        b  = sum_k w_k (|u_k|^2 sum_j conj(c_kj) g_kj - u_k g_kk)
        c0 = sum_k w_k (sigma_k^2 |u_k|^2 + |1 - u_k c_kk|^2 + |u_k|^2 sum_{j!=k} |c_kj|^2)
    """
    V = np.asarray(V, dtype=complex)
    u = np.asarray(u, dtype=complex)
    w = np.asarray(w, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    K, N = real.K, real.N

    C = real.h_d.conj() @ V.T  # (K, K)
    # g[k, j] = H_r,k^H v_j -> (K, K, N)
    g = np.einsum("kmn,jm->kjn", real.H_r.conj(), V)
    a = w * np.abs(u) ** 2

    A = np.einsum("k,kjn,kjp->np", a, g, g.conj())
    A = 0.5 * (A + A.conj().T)
    b = np.einsum("k,kj,kjn->n", a, C.conj(), g)
    b -= np.einsum("k,kn->n", w * u, g[np.arange(K), np.arange(K)])
    if N == 0:
        A = np.zeros((0, 0), complex)
        b = np.zeros(0, complex)

    cdiag = np.diag(C)
    cross = np.sum(np.abs(C) ** 2, axis=1) - np.abs(cdiag) ** 2
    c0 = float(np.sum(w * (sigma2 * np.abs(u) ** 2 + np.abs(1.0 - u * cdiag) ** 2
                           + np.abs(u) ** 2 * cross)))
    return QuadraticForm(A=A, b=b, c0=c0)


def quad_value(qf: QuadraticForm, theta) -> float:
    theta = np.asarray(theta)
    return float(np.vdot(theta, qf.A @ theta).real + 2.0 * np.vdot(qf.b, theta).real)


def penalized_value(qf: QuadraticForm, theta, lam: float) -> float:
    """``f_lam(theta)`` without the constant ``c0``."""
    theta = np.asarray(theta)
    return quad_value(qf, theta) - lam * float(np.vdot(theta, theta).real)


def surrogate_value(qf: QuadraticForm, theta, theta_bar, lam: float) -> float:
    """Majorant of ``f_lam`` built by linearizing the penalty at ``theta_bar``."""
    theta = np.asarray(theta)
    theta_bar = np.asarray(theta_bar)
    lin = np.vdot(theta_bar, theta_bar).real + 2.0 * np.vdot(theta_bar, theta - theta_bar).real
    return quad_value(qf, theta) - lam * float(lin)


def surrogate_gradient(qf: QuadraticForm, theta, theta_bar, lam: float) -> np.ndarray:
    return 2.0 * (qf.A @ theta + qf.b - lam * np.asarray(theta_bar))


# projections --------------------------------------------------------------

def project_disk(z):
    """Elementwise projection onto the closed unit disk."""
    z = np.asarray(z, dtype=complex)
    mag = np.abs(z)
    out = np.where(mag > 1.0, z / np.where(mag > 1.0, mag, 1.0), z)
    return out if out.ndim else complex(out)


def project_polygon(z, L: int):
    """Elementwise projection onto the regular L-gon with vertices ``exp(2j*pi*l/L)``.

    Each point is rotated into the wedge between two neighbouring vertices,
    where the hull is bounded by a single edge; points beyond that edge are
    clamped onto the edge segment. For L=2 the hull is the segment [-1, 1].
    """
    z = np.asarray(z, dtype=complex)
    if L < 2:
        raise ValueError("polygon projection needs L >= 2")
    if L == 2:
        out = np.clip(z.real, -1.0, 1.0) + 0j
        return out if out.ndim else complex(out)

    step = 2.0 * np.pi / L
    # wedge m spans angles [m*step, (m+1)*step)
    m = np.floor(np.mod(np.angle(z), 2.0 * np.pi) / step)
    m = np.where(m >= L, L - 1, m)
    rot = np.exp(1j * (m + 0.5) * step)
    t = z / rot  # wedge now symmetric about angle 0, edge at Re = cos(step/2)
    apothem = math.cos(step / 2.0)
    half = math.sin(step / 2.0)
    outside = t.real > apothem
    t_proj = np.where(outside, apothem + 1j * np.clip(t.imag, -half, half), t)
    out = t_proj * rot
    return out if out.ndim else complex(out)


def project(z, alphabet: PhaseAlphabet):
    if alphabet.is_discrete:
        return project_polygon(z, alphabet.levels)
    return project_disk(z)


def hull_distance(theta, alphabet: PhaseAlphabet) -> float:
    """Largest distance of any coordinate from the relaxed (convex) set."""
    theta = np.asarray(theta, dtype=complex)
    if theta.size == 0:
        return 0.0
    return float(np.max(np.abs(theta - project(theta, alphabet))))


def alphabet_distance(theta, alphabet: PhaseAlphabet) -> float:
    """``max_n dist(theta_n, F)`` for the unrelaxed alphabet."""
    theta = np.asarray(theta, dtype=complex)
    if theta.size == 0:
        return 0.0
    if alphabet.is_discrete:
        d = np.abs(theta[:, None] - alphabet.points[None, :]).min(axis=1)
    else:
        d = np.abs(np.abs(theta) - 1.0)
    return float(d.max())


# GEMM ---------------------------------------------------------------------

def momentum_weights(n: int, rule: str = "printed") -> np.ndarray:
    """Extrapolation weights ``zeta_0..zeta_{n-1}``.

    ``eta_{-1} = 0``, ``eta_i = (1 + sqrt(1 + 4 eta_{i-1}^2)) / 2``.
    ``rule="printed"`` gives ``zeta_i = (eta_i - 1) / eta_i``; ``"fista"``
    gives the classical ``(eta_{i-1} - 1) / eta_i`` (clipped at 0).
    """
    zeta = np.empty(n)
    eta_prev = 0.0
    for i in range(n):
        eta = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * eta_prev ** 2))
        if rule == "printed":
            zeta[i] = (eta - 1.0) / eta
        elif rule == "fista":
            zeta[i] = max(eta_prev - 1.0, 0.0) / eta
        else:
            raise ValueError(f"unknown momentum rule {rule!r}")
        eta_prev = eta
    return zeta


def lipschitz_estimate(A: np.ndarray, iters: int = 10, rng=None) -> float:
    """Power-iteration estimate of ``2 * lambda_max(A)`` (gradient Lipschitz constant)."""
    n = A.shape[0]
    if n == 0:
        return 0.0
    x = np.ones(n, complex) / math.sqrt(n)
    est = 0.0
    for _ in range(iters):
        y = A @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return 0.0
        est = float(np.vdot(x, y).real)
        x = y / nrm
    return 2.0 * max(est, float(np.vdot(x, A @ x).real))


@dataclass
class GemmResult:
    theta: np.ndarray
    iterations: int
    converged: bool
    rho: float
    values: list[float] = field(default_factory=list)


def _apg_step(qf, z, theta_bar, lam, alphabet, rho):
    """Projected-gradient step from ``z`` with backtracking on ``rho``."""
    grad = surrogate_gradient(qf, z, theta_bar, lam)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite surrogate gradient")
    g_z = surrogate_value(qf, z, theta_bar, lam)
    for _ in range(200):
        cand = project(z - grad / rho, alphabet)
        d = cand - z
        bound = g_z + float(np.vdot(grad, d).real) + 0.5 * rho * float(np.vdot(d, d).real)
        if surrogate_value(qf, cand, theta_bar, lam) <= bound + 1e-12 * max(abs(bound), 1.0):
            return cand, rho
        rho *= 2.0
    return cand, rho


def gemm_solve(qf: QuadraticForm, lam: float, theta0, alphabet: PhaseAlphabet,
               eps: float = 1e-5, max_iter: int = 500, exact_mm: bool = False,
               momentum: str = "printed", rho0: float | None = None,
               inner_eps: float | None = None, inner_max_iter: int = 500) -> GemmResult:
    """Minimize ``f_lam`` over the relaxed alphabet, starting at ``theta0``.

    Inexact mode (default) takes one extrapolated projected-gradient step
    per majorant; ``exact_mm`` runs the accelerated inner loop to
    ``inner_eps`` on each majorant instead. Stops once successive iterates
    move less than ``eps``. The returned point is the iterate with the
    lowest ``f_lam`` seen, so the result never increases the objective
    relative to ``theta0``.
    """
    theta = project(np.asarray(theta0, dtype=complex), alphabet)
    N = theta.size
    if N == 0:
        return GemmResult(theta=theta, iterations=0, converged=True, rho=0.0)
    if rho0 is None:
        rho0 = lipschitz_estimate(qf.A)
    rho = max(rho0, 1e-12 * (1.0 + abs(lam)))
    zeta = momentum_weights(max_iter, momentum)

    best = theta
    best_val = penalized_value(qf, theta, lam)
    values = [best_val]
    prev = theta
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if exact_mm:
            new, rho = _apg_inner(qf, theta, lam, alphabet, rho,
                                  inner_eps if inner_eps is not None else 0.1 * eps,
                                  inner_max_iter, momentum)
        else:
            z = theta + zeta[it - 1] * (theta - prev)
            new, rho = _apg_step(qf, z, theta, lam, alphabet, rho)
        val = penalized_value(qf, new, lam)
        if not math.isfinite(val):
            raise FloatingPointError("non-finite phase objective")
        values.append(val)
        if val < best_val:
            best, best_val = new, val
        step = float(np.linalg.norm(new - theta))
        prev, theta = theta, new
        if step < eps:
            converged = True
            break
    return GemmResult(theta=best, iterations=it, converged=converged, rho=rho, values=values)


def _apg_inner(qf, theta_bar, lam, alphabet, rho, eps, max_iter, momentum):
    """Accelerated projected gradient on one majorant ``G(. | theta_bar)``."""
    zeta = momentum_weights(max_iter, momentum)
    x_prev = x = theta_bar
    for i in range(max_iter):
        z = x + zeta[i] * (x - x_prev)
        new, rho = _apg_step(qf, z, theta_bar, lam, alphabet, rho)
        x_prev, x = x, new
        if np.linalg.norm(x - x_prev) < eps:
            break
    return x, rho
