"""Acceptance criteria, each run at its stated tolerance and budget.

One ``[PASS]``/``[FAIL]`` line per criterion is printed in the terminal
summary (see conftest.py) and to stdout when run with ``-s``.
"""

import pytest

from irsopt import acceptance as acc

RESULTS: list[str] = []


def record(check, budget_s=None):
    line = check.line()
    if budget_s is not None:
        within = check.seconds <= budget_s
        line += f" [budget {budget_s:g}s {'met' if within else 'EXCEEDED'}]"
    RESULTS.append(line)
    print(line)
    assert check.passed, line
    if budget_s is not None:
        assert check.seconds <= budget_s, line


def test_c01_quadratic_form_consistency():
    record(acc.check_quadratic_consistency(trials=100, tol=1e-9), budget_s=5)


def test_c02_projection_oracle_equivalence():
    record(acc.check_projection(points=1000, tol=1e-9, levels=(2, 3, 4, 8, 16)), budget_s=5)


def test_c03_gradient_checks():
    record(acc.check_gradient(trials=50, step=1e-6, tol=1e-5), budget_s=5)


def test_c04_wmmse_block_optimality_and_monotonicity():
    record(acc.check_wmmse(trials=50, tol=1e-6, slack=1e-9), budget_s=30)


def test_c05_single_user_capacity():
    record(acc.check_single_user(trials=20, tol=1e-6))


def test_c06_stage_wise_descent():
    record(acc.check_stage_descent(trials=50, slack=1e-9))


def test_c07_oracle_near_optimality():
    record(acc.check_oracle_near_optimality(trials=20, mean_min=0.95, each_min=0.85), budget_s=300)


@pytest.mark.slow
def test_c08_exact_penalty_feasibility():
    record(acc.check_exact_penalty(trials=50, tol=1e-3, frac=0.90))


@pytest.mark.slow
def test_c09_figure_ordering_desk_scale():
    record(acc.check_ordering(trials=30, N=32), budget_s=600)


@pytest.mark.slow
def test_c10_convergence_speed():
    # shares the 50 preset solves with C8 through an in-process cache
    record(acc.check_convergence_speed(trials=50, max_outer=30, frac=0.95, max_seconds=60.0))


def test_mutation_smoke():
    record(acc.check_mutations())


def test_majorization_and_iterate_feasibility():
    record(acc.check_majorization())
