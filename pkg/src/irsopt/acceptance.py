"""Release checks: oracle comparisons, invariants and experiment-level criteria.

Each ``check_*`` function runs one criterion and returns a :class:`Check`.
They are shared by ``tests/test_acceptance.py`` and ``irsopt verify``.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from . import baselines
from .model import ChannelRealization, PhaseAlphabet, paper_default, sample_realization, trial_rng
from .phase_solver import (QuadraticForm, assemble_quadratic, gemm_solve, project_disk,
                           project_polygon, surrogate_gradient, surrogate_value)
from .rate_core import mses, phi_lambda, total_power
from .solver import PenaltySchedule, SolverOptions, solve
from .wmmse import solve_inner, update_u, update_v, update_w

__all__ = [
    "Check",
    "random_instance",
    "check_quadratic_consistency",
    "check_projection",
    "check_gradient",
    "check_wmmse",
    "check_single_user",
    "check_stage_descent",
    "check_oracle_near_optimality",
    "check_exact_penalty",
    "check_ordering",
    "check_convergence_speed",
    "check_mutations",
    "run_all",
]

DEFAULT_SEED = 20200


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(name: str):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            t0 = time.perf_counter()
            passed, detail = fn(*args, **kwargs)
            return Check(name, bool(passed), detail, time.perf_counter() - t0)
        return wrapper
    return deco


def _crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_instance(rng: np.random.Generator, M=4, K=3, N=8):
    """Unit-scale random channels and WMMSE variables for algebraic checks."""
    real = ChannelRealization(G=_crandn(rng, N, M), h_d=_crandn(rng, K, M),
                              h_r=_crandn(rng, K, N), eta=rng.uniform(0.5, 1.0))
    V = _crandn(rng, K, M)
    u = _crandn(rng, K)
    w = rng.uniform(0.1, 5.0, K)
    theta = project_disk(_crandn(rng, N) * 1.2)
    sigma2 = rng.uniform(0.1, 2.0, K)
    return real, V, u, w, theta, sigma2


# 1 -------------------------------------------------------------------------

@_timed("C1 quadratic-form consistency")
def check_quadratic_consistency(trials=100, seed=DEFAULT_SEED, tol=1e-9,
                                assemble: Callable = assemble_quadratic):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        real, V, u, w, theta, sigma2 = random_instance(rng)
        qf = assemble(V, u, w, real, sigma2)
        direct = float(np.sum(w * mses(u, V, theta, real, sigma2)))
        err = abs(qf.value(theta) - direct) / (1.0 + abs(direct))
        worst = max(worst, err)
    return worst <= tol, f"max relative error {worst:.2e} over {trials} instances (tol {tol:g})"


# 2 -------------------------------------------------------------------------

def _random_points(rng, n):
    r = 2.5 * np.sqrt(rng.uniform(size=n))
    return r * np.exp(2j * np.pi * rng.uniform(size=n))


@_timed("C2 projection oracle equivalence")
def check_projection(points=1000, seed=DEFAULT_SEED, tol=1e-9, levels=(2, 3, 4, 8, 16),
                     project_fn: Callable = project_polygon):
    rng = np.random.default_rng(seed)
    msgs, ok = [], True
    for L in levels:
        z = _random_points(rng, points)
        z[:L] = np.exp(2j * np.pi * np.arange(L) / L)  # vertices map to themselves
        got = project_fn(z, L)
        want = np.array([baselines.polygon_projection_oracle(x, L) for x in z])
        err = float(np.max(np.abs(got - want)))
        ok &= err <= tol
        msgs.append(f"L={L}:{err:.1e}")
    x, y = _random_points(rng, points), _random_points(rng, points)
    px, py = project_disk(x), project_disk(y)
    idem = float(np.max(np.abs(project_disk(px) - px)))
    expand = float(np.max(np.abs(px - py) - np.abs(x - y)))
    ok &= idem <= 1e-15 and expand <= 1e-12
    msgs.append(f"disk idempotence {idem:.1e}, expansion {max(expand, 0.0):.1e}")
    return ok, "; ".join(msgs)


# 3 -------------------------------------------------------------------------

@_timed("C3 surrogate gradient vs finite differences")
def check_gradient(trials=50, seed=DEFAULT_SEED, step=1e-6, tol=1e-5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        N = int(rng.integers(1, 12))
        X = _crandn(rng, N, N)
        qf = QuadraticForm(A=X @ X.conj().T, b=_crandn(rng, N), c0=0.0)
        lam = rng.uniform(0, 3)
        bar = project_disk(_crandn(rng, N))
        theta = _crandn(rng, N)
        g = surrogate_gradient(qf, theta, bar, lam)
        fd = baselines.fd_gradient(lambda t: surrogate_value(qf, t, bar, lam), theta, step)
        worst = max(worst, float(np.linalg.norm(g - fd) / np.linalg.norm(g)))
    return worst <= tol, f"max relative error {worst:.2e} over {trials} instances (tol {tol:g})"


# 4 -------------------------------------------------------------------------

def _v_oracle(u, w, theta, real, sigma2, p_max):
    """min sum_k w_k e_k over V with ||V||^2 <= p_max, via a generic conic solver."""
    import cvxpy as cp

    from .model import effective_channels
    H = effective_channels(real, theta)
    K, M = H.shape
    Vv = cp.Variable((K, M), complex=True)
    obj = 0
    for k in range(K):
        a = Vv @ H[k].conj()  # entry j is h_k^H v_j
        e_k = sigma2[k] * abs(u[k]) ** 2 + cp.square(cp.abs(1 - u[k] * a[k]))
        for j in range(K):
            if j != k:
                e_k = e_k + cp.square(cp.abs(u[k] * a[j]))
        obj = obj + w[k] * e_k
    prob = cp.Problem(cp.Minimize(obj), [cp.sum_squares(Vv) <= p_max])
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


@_timed("C4 WMMSE block optimality and monotonicity")
def check_wmmse(trials=50, seed=DEFAULT_SEED, tol=1e-6, slack=1e-9):
    rng = np.random.default_rng(seed)
    worst_u = worst_w = worst_v = 0.0
    violations = 0
    for _ in range(trials):
        real, V, u, w, theta, sigma2 = random_instance(rng)
        p_max = float(rng.uniform(0.5, 10.0))
        V = V * math.sqrt(p_max / total_power(V)) * rng.uniform(0.2, 1.0)
        K = real.K

        u_cf = update_u(V, theta, real, sigma2)
        for k in range(K):
            def e_k(x, k=k):
                uu = np.zeros(K, complex)
                uu[k] = x[0] + 1j * x[1]
                return mses(uu, V, theta, real, sigma2)[k]
            res = optimize.minimize(e_k, [0.0, 0.0], method="BFGS", options={"gtol": 1e-12})
            worst_u = max(worst_u, (e_k([u_cf[k].real, u_cf[k].imag]) - res.fun) / res.fun)

        e = mses(u_cf, V, theta, real, sigma2)
        w_cf = update_w(u_cf, V, theta, real, sigma2)
        for k in range(K):
            res = optimize.minimize_scalar(lambda x: x * e[k] - math.log(x),
                                           bounds=(1e-9, 1e6), method="bounded",
                                           options={"xatol": 1e-12})
            worst_w = max(worst_w, abs(w_cf[k] - res.x) / w_cf[k])

        V_cf = update_v(u_cf, w_cf, theta, real, sigma2, p_max)
        obj_cf = float(np.sum(w_cf * mses(u_cf, V_cf, theta, real, sigma2)))
        obj_or = _v_oracle(u_cf, w_cf, theta, real, sigma2, p_max)
        feasible = total_power(V_cf) <= p_max * (1 + 1e-8)
        worst_v = max(worst_v, (obj_cf - obj_or) / max(abs(obj_or), 1.0), 0.0 if feasible else np.inf)

        inner = solve_inner(V, u, w, theta, real, sigma2, p_max, lam=rng.uniform(0, 1),
                            tol=1e-10, max_cycles=50, record_updates=True)
        tr = np.asarray(inner.trace)
        violations += int(np.sum(tr[1:] > tr[:-1] + slack * np.abs(tr[:-1])))
    ok = max(worst_u, worst_w, worst_v) <= tol and violations == 0
    return ok, (f"u gap {worst_u:.1e}, w gap {worst_w:.1e}, V gap {worst_v:.1e} (tol {tol:g}); "
                f"{violations} monotonicity violations over {trials} inner solves")


# 5 -------------------------------------------------------------------------

@_timed("C5 single-user capacity")
def check_single_user(trials=20, seed=DEFAULT_SEED, tol=1e-6):
    cfg = paper_default(K=1)
    worst = 0.0
    for t in range(trials):
        real = sample_realization(cfg, trial_rng(seed, t))
        rep = baselines.no_irs_wmmse(cfg, real)
        cap = math.log1p(cfg.p_max * float(np.linalg.norm(real.h_d[0]) ** 2) / cfg.sigma2[0])
        worst = max(worst, abs(rep.sum_rate - cap))
    return worst <= tol, f"max |rate - ln(1+P|h|^2/sigma^2)| = {worst:.1e} nats over {trials} trials"


# 6 -------------------------------------------------------------------------

def stage_violations(trace, slack=1e-9) -> int:
    bad = 0
    for prev, cur in zip(trace[:-1], trace[1:]):
        if cur.lam == prev.lam and cur.phi > prev.phi + slack * abs(prev.phi):
            bad += 1
    return bad


@_timed("C6 stage-wise descent")
def check_stage_descent(trials=50, seed=DEFAULT_SEED, slack=1e-9):
    alphabets = [PhaseAlphabet(), PhaseAlphabet(2), PhaseAlphabet(4)]
    bad = 0
    for t in range(trials):
        cfg = paper_default(M=4, K=3, N=8, alphabet=alphabets[t % 3])
        real = sample_realization(cfg, trial_rng(seed, t))
        rep = solve(cfg, real, rng=trial_rng(seed, t, 1), opts=SolverOptions(init="random"))
        bad += stage_violations(rep.trace, slack)
    return bad == 0, f"{bad} fixed-lambda increases of phi over {trials} solves"


# 7 -------------------------------------------------------------------------

def oracle_ratios(trials=20, seed=DEFAULT_SEED, opts=None):
    """Rows of (proposed, quantized, exhaustive) rates on tiny L=2 instances."""
    cfg = paper_default(M=2, K=2, N=4, alphabet="dp:2")
    out = []
    for t in range(trials):
        real = sample_realization(cfg, trial_rng(seed, t))
        rep = solve(cfg, real, opts=opts, rng=trial_rng(seed, t, 1))
        quant = baselines.quantize_baseline(
            solve(cfg.replace(alphabet=PhaseAlphabet()), real, opts=opts, rng=trial_rng(seed, t, 1)),
            2, real, cfg, opts)
        _, best = baselines.exhaustive_discrete(cfg, real, 2)
        out.append((rep.sum_rate, quant.sum_rate, best))
    return np.array(out)


@_timed("C7 oracle near-optimality")
def check_oracle_near_optimality(trials=20, seed=DEFAULT_SEED, mean_min=0.95, each_min=0.85,
                                 opts=None):
    rates = oracle_ratios(trials, seed, opts)
    ratio = rates[:, 0] / rates[:, 2]
    ok = ratio.mean() >= mean_min and ratio.min() >= each_min
    return ok, f"mean ratio {ratio.mean():.4f} (>= {mean_min}), min {ratio.min():.4f} (>= {each_min})"


# 8 / 10 --------------------------------------------------------------------

@functools.lru_cache(maxsize=4)
def paper_default_runs(trials=50, seed=DEFAULT_SEED, alphabets=("dp:2", "dp:4", "cp")):
    """Full-scale solves: {alphabet: [(infeasibility, iterations, termination, seconds)]}."""
    out = {}
    for a in alphabets:
        cfg = paper_default(alphabet=a)
        rows = []
        for t in range(trials):
            real = sample_realization(cfg, trial_rng(seed, t))
            rep = solve(cfg, real, rng=trial_rng(seed, t, 1))
            rows.append((rep.relaxed_infeasibility, rep.iterations, rep.termination, rep.wall_time))
        out[a] = rows
    return out


@_timed("C8 exact-penalty feasibility")
def check_exact_penalty(trials=50, seed=DEFAULT_SEED, tol=1e-3, frac=0.90):
    runs = paper_default_runs(trials, seed)
    fracs = {a: float(np.mean([r[0] <= tol for r in rows])) for a, rows in runs.items()}
    ok = all(f >= frac for f in fracs.values())
    return ok, ", ".join(f"{a}: {f:.0%}" for a, f in fracs.items()) + f" within {tol:g} (need {frac:.0%})"


@_timed("C10 convergence speed")
def check_convergence_speed(trials=50, seed=DEFAULT_SEED, max_outer=30, frac=0.95, max_seconds=60.0):
    runs = paper_default_runs(trials, seed)
    parts, ok = [], True
    for a, rows in runs.items():
        within = float(np.mean([r[1] <= max_outer for r in rows]))
        by_tol = float(np.mean([r[2] == "tolerance" for r in rows]))
        slowest = max(r[3] for r in rows)
        ok &= within >= frac and slowest <= max_seconds
        parts.append(f"{a}: {within:.0%} stop <= {max_outer} it ({by_tol:.0%} by tolerance), "
                     f"slowest {slowest:.1f}s")
    return ok, "; ".join(parts)


# 9 -------------------------------------------------------------------------

SCHEMES = ("proposed-CP", "proposed-L4", "proposed-L2", "quantize-L2", "quantize-L4", "no-IRS")


def scheme_rates(cfg, real, rng_seed, trial, schedule=None, opts=None,
                 schemes=SCHEMES) -> dict[str, float]:
    """Final sum rates (nats) of the compared schemes on one realization."""
    out = {}
    cp = None
    need_cp = any(s in ("proposed-CP",) or s.startswith("quantize") for s in schemes)
    if need_cp:
        cp = solve(cfg.replace(alphabet=PhaseAlphabet()), real, schedule, opts,
                   rng=trial_rng(rng_seed, trial, 1))
    for s in schemes:
        if s == "proposed-CP":
            out[s] = cp.sum_rate
        elif s.startswith("proposed-L"):
            L = int(s.split("L")[1])
            # cp is exactly the continuous solution solve() would compute itself
            out[s] = solve(cfg.replace(alphabet=PhaseAlphabet(L)), real, schedule, opts,
                           rng=trial_rng(rng_seed, trial, 1), continuous=cp).sum_rate
        elif s.startswith("quantize-L"):
            L = int(s.split("L")[1])
            out[s] = baselines.quantize_baseline(cp, L, real, cfg, opts).sum_rate
        elif s == "no-IRS":
            out[s] = baselines.no_irs_wmmse(cfg, real, schedule, opts).sum_rate
        else:
            raise ValueError(f"unknown scheme {s!r}")
    return out


def ordering_holds(a, b, strict=False, n_se=2.0) -> tuple[bool, float, float]:
    """Paired comparison ``mean(a) >= mean(b)`` within ``n_se`` standard errors."""
    d = np.asarray(a) - np.asarray(b)
    se = float(np.std(d, ddof=1) / math.sqrt(d.size)) if d.size > 1 else 0.0
    mean = float(d.mean())
    return (mean > 0 if strict else mean >= -n_se * se), mean, se


@_timed("C9 figure ordering at desk scale")
def check_ordering(trials=30, seed=DEFAULT_SEED, N=32, opts=None):
    cfg = paper_default(N=N)
    rows = []
    for t in range(trials):
        real = sample_realization(cfg, trial_rng(seed, t))
        rows.append(scheme_rates(cfg, real, seed, t, opts=opts,
                                 schemes=("proposed-CP", "proposed-L4", "proposed-L2",
                                          "quantize-L2", "no-IRS")))
    col = {s: np.array([r[s] for r in rows]) / math.log(2) for s in rows[0]}
    pairs = [("proposed-CP", "proposed-L4", False), ("proposed-L4", "proposed-L2", False),
             ("proposed-L2", "quantize-L2", False), ("proposed-CP", "no-IRS", True)]
    ok, parts = True, []
    for a, b, strict in pairs:
        good, mean, se = ordering_holds(col[a], col[b], strict)
        ok &= good
        parts.append(f"{a}{'>' if strict else '>='}{b}: diff {mean:+.3f}±{se:.3f} bits {'ok' if good else 'FAIL'}")
    means = ", ".join(f"{s}={v.mean():.3f}" for s, v in col.items())
    return ok, "; ".join(parts) + f" | means {means}"


# mutation smoke tests ----------------------------------------------------

def _assemble_flipped_b(V, u, w, real, sigma2):
    qf = assemble_quadratic(V, u, w, real, sigma2)
    return QuadraticForm(A=qf.A, b=-qf.b, c0=qf.c0)


@_timed("mutation smoke tests")
def check_mutations():
    c1 = check_quadratic_consistency(trials=10, assemble=_assemble_flipped_b)
    c2 = check_projection(points=200, levels=(4,), project_fn=baselines.project_polygon_literal)
    ok = not c1.passed and not c2.passed
    return ok, (f"sign-flipped b {'rejected' if not c1.passed else 'ACCEPTED'}; "
                f"literal polygon formula at L=4 {'rejected' if not c2.passed else 'ACCEPTED'}")


# module invariants ---------------------------------------------------------

@_timed("majorization and iterate feasibility")
def check_majorization(trials=50, seed=DEFAULT_SEED):
    from .phase_solver import hull_distance, penalized_value, project
    rng = np.random.default_rng(seed)
    worst_gap, worst_feas = 0.0, 0.0
    for t in range(trials):
        alphabet = [PhaseAlphabet(), PhaseAlphabet(2), PhaseAlphabet(3), PhaseAlphabet(8)][t % 4]
        N = 6
        X = _crandn(rng, N, N)
        qf = QuadraticForm(A=X @ X.conj().T, b=_crandn(rng, N), c0=0.0)
        lam = rng.uniform(0, 5)
        th = project(_crandn(rng, N), alphabet)
        bar = project(_crandn(rng, N), alphabet)
        gap = penalized_value(qf, th, lam) - surrogate_value(qf, th, bar, lam)
        tight = abs(penalized_value(qf, bar, lam) - surrogate_value(qf, bar, bar, lam))
        worst_gap = max(worst_gap, gap, tight)
        res = gemm_solve(qf, lam, th, alphabet, max_iter=50)
        worst_feas = max(worst_feas, hull_distance(res.theta, alphabet))
    ok = worst_gap <= 1e-10 and worst_feas <= 1e-12
    return ok, f"max f - G {worst_gap:.1e}, max hull distance {worst_feas:.1e}"


QUICK = (check_quadratic_consistency, check_projection, check_gradient, check_wmmse,
         check_single_user, check_stage_descent, check_oracle_near_optimality,
         check_majorization, check_mutations)
FULL_SCALE = (check_ordering, check_exact_penalty, check_convergence_speed)


def run_all(quick: bool = False, echo: Callable[[str], None] | None = print) -> list[Check]:
    checks = QUICK if quick else QUICK + FULL_SCALE
    results = []
    for fn in checks:
        res = fn()
        results.append(res)
        if echo:
            echo(res.line())
    return results
