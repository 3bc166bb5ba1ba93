"""Experiment runners producing plot-ready CSV / JSON.

Every trial draws its channel from ``trial_rng(seed, trial, 0)`` and its
random initial phases from ``trial_rng(seed, trial, 1)``, so outputs do not
depend on the number of workers or on scheduling order.
"""

from __future__ import annotations

import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .acceptance import scheme_rates
from .model import PhaseAlphabet, SystemConfig, config_to_dict, dbm_to_watt, sample_realization, trial_rng
from .solver import PenaltySchedule, SolverOptions, solve

__all__ = [
    "RunSettings",
    "CONVERGENCE_COLUMNS",
    "SWEEP_COLUMNS",
    "schemes_for",
    "parallel_map",
    "convergence_rows",
    "sweep_power_rows",
    "sweep_elements_rows",
    "write_csv",
    "write_json",
]

CONVERGENCE_COLUMNS = ("alphabet", "trial", "iteration", "lambda", "phi_lambda",
                       "sum_rate_nats", "sum_rate_bits", "infeasibility")
SWEEP_COLUMNS = ("scheme", "N", "P_dBm", "mean_rate_bits", "se", "trials", "seed")
DEFAULT_ALPHABETS = (PhaseAlphabet(), PhaseAlphabet(2), PhaseAlphabet(4))


@dataclass
class RunSettings:
    config: SystemConfig
    seed: int = 0
    trials: int = 30
    alphabets: tuple[PhaseAlphabet, ...] = DEFAULT_ALPHABETS
    schedule: PenaltySchedule = field(default_factory=PenaltySchedule)
    opts: SolverOptions = field(default_factory=SolverOptions)
    workers: int = 1

    def header(self, command: str, extra: dict[str, Any] | None = None) -> dict[str, Any]:
        h: dict[str, Any] = {"command": command, "seed": self.seed, "trials": self.trials,
                             "alphabets": " ".join(str(a) for a in self.alphabets)}
        h.update(config_to_dict(self.config))
        h.pop("alphabet", None)
        h.update({f"schedule.{k}": v for k, v in asdict(self.schedule).items()})
        h.update({f"solver.{k}": v for k, v in asdict(self.opts).items()})
        if extra:
            h.update(extra)
        return h


def schemes_for(alphabets: Iterable[PhaseAlphabet]) -> tuple[str, ...]:
    """Proposed scheme per alphabet, quantized baseline per discrete alphabet, and no-IRS."""
    alphabets = list(alphabets)
    out = [f"proposed-{a.label}" for a in alphabets]
    out += [f"quantize-{a.label}" for a in alphabets if a.is_discrete]
    out.append("no-IRS")
    return tuple(out)


def parallel_map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Ordered map; results are identical for any worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return str(x)


# convergence -------------------------------------------------------------

def _convergence_trial(args):
    settings, alphabet, trial = args
    cfg = settings.config.replace(alphabet=alphabet)
    real = sample_realization(cfg, trial_rng(settings.seed, trial, 0))
    rep = solve(cfg, real, settings.schedule, settings.opts, rng=trial_rng(settings.seed, trial, 1))
    return [(str(alphabet), trial, r.iteration, r.lam, r.phi, r.sum_rate,
             r.sum_rate / math.log(2.0), r.infeasibility) for r in rep.trace]


def convergence_rows(settings: RunSettings) -> list[tuple]:
    jobs = [(settings, a, t) for a in settings.alphabets for t in range(settings.trials)]
    rows: list[tuple] = []
    for chunk in parallel_map(_convergence_trial, jobs, settings.workers):
        rows.extend(chunk)
    return rows


# sweeps ------------------------------------------------------------------

def _sweep_trial(args):
    settings, cfg, trial, schemes = args
    real = sample_realization(cfg, trial_rng(settings.seed, trial, 0))
    return scheme_rates(cfg, real, settings.seed, trial, settings.schedule, settings.opts, schemes)


def _summarize(rates: list[dict[str, float]], schemes, N, p_dbm, settings) -> list[tuple]:
    rows = []
    for s in schemes:
        bits = np.array([r[s] for r in rates]) / math.log(2.0)
        se = float(bits.std(ddof=1) / math.sqrt(bits.size)) if bits.size > 1 else 0.0
        rows.append((s, N, float(p_dbm), float(bits.mean()), se, bits.size, settings.seed))
    return rows


def _sweep(settings: RunSettings, points: list[tuple[int, float]]) -> list[tuple]:
    schemes = schemes_for(settings.alphabets)
    rows = []
    for N, p_dbm in points:
        cfg = settings.config.replace(N=N, p_max=float(dbm_to_watt(p_dbm)))
        jobs = [(settings, cfg, t, schemes) for t in range(settings.trials)]
        rates = parallel_map(_sweep_trial, jobs, settings.workers)
        rows.extend(_summarize(rates, schemes, N, p_dbm, settings))
    return rows


def sweep_power_rows(settings: RunSettings, p_list_dbm: Sequence[float]) -> list[tuple]:
    """Mean final sum rate per scheme and transmit power (N from the config)."""
    return _sweep(settings, [(settings.config.N, p) for p in p_list_dbm])


def sweep_elements_rows(settings: RunSettings, n_list: Sequence[int], p_dbm: float = 5.0) -> list[tuple]:
    """Mean final sum rate per scheme and IRS size at fixed power."""
    return _sweep(settings, [(int(n), p_dbm) for n in n_list])


# output ------------------------------------------------------------------

def write_csv(stream: io.TextIOBase, header: dict[str, Any], columns: Sequence[str], rows) -> None:
    for k, v in header.items():
        stream.write(f"# {k}={_fmt(v)}\n")
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(x) for x in row) + "\n")


def write_json(stream: io.TextIOBase, header: dict[str, Any], columns: Sequence[str], rows) -> None:
    doc = {"header": header, "columns": list(columns),
           "rows": [dict(zip(columns, row)) for row in rows]}
    json.dump(doc, stream, indent=1)
    stream.write("\n")
