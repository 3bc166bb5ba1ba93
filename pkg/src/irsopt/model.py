"""System configuration, channel generation and composite channels.

All powers are stored in watts. dB / dBm values are accepted only at the
config boundary (:func:`config_from_dict`) and converted once.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

__all__ = [
    "PhaseAlphabet",
    "Geometry",
    "PathLoss",
    "SystemConfig",
    "ChannelRealization",
    "db_to_lin",
    "dbm_to_watt",
    "watt_to_dbm",
    "path_loss",
    "trial_rng",
    "sample_realization",
    "effective_channel",
    "effective_channels",
    "paper_default",
    "config_from_dict",
    "config_to_dict",
    "load_config",
]


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_watt(x_dbm):
    """-80 dBm -> 1e-11 W."""
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(x_w):
    return 10.0 * np.log10(np.asarray(x_w, dtype=float)) + 30.0


@dataclass(frozen=True)
class PhaseAlphabet:
    """Feasible set of one IRS element.

    ``levels=None`` is the continuous unit circle; ``levels=L`` the L-ary set
    ``{exp(2j*pi*l/L)}``.
    """

    levels: int | None = None

    def __post_init__(self):
        if self.levels is not None and int(self.levels) < 2:
            raise ValueError(f"discrete alphabet needs L >= 2, got {self.levels}")

    @property
    def is_discrete(self) -> bool:
        return self.levels is not None

    @property
    def points(self) -> np.ndarray:
        if self.levels is None:
            raise ValueError("continuous alphabet has no finite point set")
        return np.exp(2j * np.pi * np.arange(self.levels) / self.levels)

    @classmethod
    def parse(cls, text: str) -> "PhaseAlphabet":
        """Parse ``"cp"`` or ``"dp:L"``."""
        text = text.strip().lower()
        if text in ("cp", "continuous"):
            return cls(None)
        if text.startswith("dp:"):
            return cls(int(text[3:]))
        raise ValueError(f"unknown alphabet {text!r}; expected 'cp' or 'dp:L'")

    def __str__(self) -> str:
        return "cp" if self.levels is None else f"dp:{self.levels}"

    @property
    def label(self) -> str:
        return "CP" if self.levels is None else f"L{self.levels}"


@dataclass(frozen=True)
class Geometry:
    bs: tuple[float, float] = (0.0, 0.0)
    irs: tuple[float, float] = (50.0, 0.0)
    user_center: tuple[float, float] = (40.0, 20.0)
    user_radius: float = 10.0


@dataclass(frozen=True)
class PathLoss:
    # linear gains at the 1 m reference distance
    c0_zeta_direct: float = 1e-3
    alpha_direct: float = 3.6
    c0_zeta_cascaded: float = 1e-4
    alpha_bs_irs: float = 2.2
    alpha_irs_user: float = 2.2


@dataclass(frozen=True)
class SystemConfig:
    M: int = 8
    K: int = 8
    N: int = 100
    eta: float = 1.0
    sigma2: tuple[float, ...] = (1e-11,) * 8
    p_max: float = float(dbm_to_watt(5.0))
    alphabet: PhaseAlphabet = field(default_factory=PhaseAlphabet)
    geometry: Geometry = field(default_factory=Geometry)
    pathloss: PathLoss = field(default_factory=PathLoss)

    def __post_init__(self):
        if self.M < 1 or self.K < 1 or self.N < 0:
            raise ValueError(f"bad dimensions M={self.M}, K={self.K}, N={self.N}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.p_max <= 0:
            raise ValueError(f"p_max must be positive, got {self.p_max}")
        sigma2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        if sigma2.size == 1:
            sigma2 = np.full(self.K, sigma2[0])
        if sigma2.size != self.K:
            raise ValueError(f"need one noise power per user ({self.K}), got {sigma2.size}")
        if np.any(sigma2 <= 0):
            raise ValueError("noise powers must be positive")
        object.__setattr__(self, "sigma2", tuple(float(s) for s in sigma2))

    @property
    def noise(self) -> np.ndarray:
        return np.asarray(self.sigma2)

    def replace(self, **changes) -> "SystemConfig":
        if "K" in changes and "sigma2" not in changes:
            changes["sigma2"] = (self.sigma2[0],) * changes["K"]
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One small-scale fading draw.

    Shapes: ``G`` (N, M), ``h_d`` (K, M), ``h_r`` (K, N) and the cached
    composite ``H_r`` (K, M, N) with ``H_r[k] = sqrt(eta) G^H Diag(h_r[k])``.
    """

    G: np.ndarray
    h_d: np.ndarray
    h_r: np.ndarray
    eta: float = 1.0
    H_r: np.ndarray = field(init=False, repr=False)
    user_xy: np.ndarray | None = None

    def __post_init__(self):
        G = np.asarray(self.G, dtype=complex)
        h_d = np.atleast_2d(np.asarray(self.h_d, dtype=complex))
        h_r = np.asarray(self.h_r, dtype=complex).reshape(h_d.shape[0], G.shape[0])
        for name, arr in (("G", G), ("h_d", h_d), ("h_r", h_r)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if G.shape[1] != h_d.shape[1]:
            raise ValueError(f"G is {G.shape} but h_d has M={h_d.shape[1]}")
        H_r = np.sqrt(self.eta) * G.conj().T[None, :, :] * h_r[:, None, :]
        H_r.setflags(write=False)
        object.__setattr__(self, "H_r", H_r)

    @property
    def M(self) -> int:
        return self.G.shape[1]

    @property
    def K(self) -> int:
        return self.h_d.shape[0]

    @property
    def N(self) -> int:
        return self.G.shape[0]

    def without_irs(self) -> "ChannelRealization":
        """Same direct channels, no reflecting elements."""
        return ChannelRealization(
            G=np.zeros((0, self.M), complex),
            h_d=self.h_d,
            h_r=np.zeros((self.K, 0), complex),
            eta=self.eta,
            user_xy=self.user_xy,
        )


def path_loss(d, c0_zeta: float, alpha: float):
    """Large-scale power gain ``c0_zeta * d**-alpha`` (linear)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("link distance must be positive")
    out = c0_zeta * d ** (-alpha)
    return float(out) if out.ndim == 0 else out


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for one Monte-Carlo trial.

    The (seed, trial, stream) triple is hashed by numpy's SeedSequence, so a
    trial's numbers do not depend on which worker runs it or in what order.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial), int(stream)]))


def _crandn(rng: np.random.Generator, shape, var) -> np.ndarray:
    # CN(0, var) entries; var broadcasts against shape
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_realization(config: SystemConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw user drops and i.i.d. Rayleigh channels for ``config``.

    The cascaded product gain is split evenly between the two hops, so each
    of ``G`` and ``h_r`` carries ``sqrt(c0_zeta_cascaded)`` times its own
    distance term.
    """
    geo, pl = config.geometry, config.pathloss
    K, M, N = config.K, config.M, config.N

    r = geo.user_radius * np.sqrt(rng.uniform(size=K))
    phi = rng.uniform(0.0, 2 * np.pi, size=K)
    users = np.asarray(geo.user_center) + np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)

    bs, irs = np.asarray(geo.bs), np.asarray(geo.irs)
    d_bu = np.linalg.norm(users - bs, axis=1)
    d_iu = np.linalg.norm(users - irs, axis=1)
    d_bi = float(np.linalg.norm(irs - bs))
    hop_gain = np.sqrt(pl.c0_zeta_cascaded)

    h_d = _crandn(rng, (K, M), path_loss(d_bu, pl.c0_zeta_direct, pl.alpha_direct)[:, None])
    G = _crandn(rng, (N, M), path_loss(d_bi, hop_gain, pl.alpha_bs_irs))
    h_r = _crandn(rng, (K, N), path_loss(d_iu, hop_gain, pl.alpha_irs_user)[:, None])
    return ChannelRealization(G=G, h_d=h_d, h_r=h_r, eta=config.eta, user_xy=users)


def effective_channels(real: ChannelRealization, theta) -> np.ndarray:
    """All users' ``h_k(theta) = h_d,k + H_r,k theta`` stacked as (K, M)."""
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (real.N,):
        raise ValueError(f"theta must have shape ({real.N},), got {theta.shape}")
    if real.N == 0:
        return real.h_d.copy()
    return real.h_d + real.H_r @ theta


def effective_channel(real: ChannelRealization, k: int, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=complex)
    if theta.shape != (real.N,):
        raise ValueError(f"theta must have shape ({real.N},), got {theta.shape}")
    return real.h_d[k] + real.H_r[k] @ theta


def paper_default(p_max_dbm: float = 5.0, alphabet: PhaseAlphabet | str = "cp", **overrides) -> SystemConfig:
    """Simulation setup of the reference experiments (M=K=8, N=100, -80 dBm noise)."""
    if isinstance(alphabet, str):
        alphabet = PhaseAlphabet.parse(alphabet)
    cfg = SystemConfig(
        M=8,
        K=8,
        N=100,
        eta=1.0,
        sigma2=(float(dbm_to_watt(-80.0)),) * 8,
        p_max=float(dbm_to_watt(p_max_dbm)),
        alphabet=alphabet,
    )
    return cfg.replace(**overrides) if overrides else cfg


# flat key/value file format -------------------------------------------------

_SOLVER_KEYS = {
    "lambda0", "growth", "stage_len", "lambda_cap", "max_outer", "outer_tol",
    "inner_tol", "max_inner", "gemm_eps", "gemm_max_iter", "warm_start",
    "exact_mm", "momentum", "init", "p_list_dbm", "n_list",
}


def config_from_dict(d: Mapping[str, Any]) -> SystemConfig:
    """Build a config from a flat mapping.

    Power-like keys may be given in watts (``p_max``, ``sigma2``) or in
    dBm (``p_max_dbm``, ``sigma2_dbm``); gains in linear or dB
    (``c0_zeta_direct_db``...). Solver keys are ignored here.
    """
    d = dict(d)
    base = paper_default()
    unknown = set(d) - _SOLVER_KEYS - {
        "preset", "M", "K", "N", "eta", "sigma2", "sigma2_dbm", "p_max", "p_max_dbm",
        "alphabet", "bs_xy", "irs_xy", "user_center", "user_radius",
        "c0_zeta_direct", "c0_zeta_direct_db", "alpha_direct",
        "c0_zeta_cascaded", "c0_zeta_cascaded_db", "alpha_bs_irs", "alpha_irs_user",
    }
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    preset = d.pop("preset", "paper_default")
    if preset != "paper_default":
        raise ValueError(f"unknown preset {preset!r}")

    K = int(d.get("K", base.K))
    if "sigma2_dbm" in d:
        sigma2 = dbm_to_watt(d["sigma2_dbm"])
    else:
        sigma2 = d.get("sigma2", base.sigma2[0])
    sigma2 = np.atleast_1d(np.asarray(sigma2, dtype=float))
    if sigma2.size == 1:
        sigma2 = np.full(K, sigma2[0])
    p_max = float(dbm_to_watt(d["p_max_dbm"])) if "p_max_dbm" in d else float(d.get("p_max", base.p_max))

    pl = base.pathloss
    def gain(key):
        if key + "_db" in d:
            return float(db_to_lin(d[key + "_db"]))
        return float(d.get(key, getattr(pl, key)))

    pathloss = PathLoss(
        c0_zeta_direct=gain("c0_zeta_direct"),
        alpha_direct=float(d.get("alpha_direct", pl.alpha_direct)),
        c0_zeta_cascaded=gain("c0_zeta_cascaded"),
        alpha_bs_irs=float(d.get("alpha_bs_irs", pl.alpha_bs_irs)),
        alpha_irs_user=float(d.get("alpha_irs_user", pl.alpha_irs_user)),
    )
    geo = base.geometry
    geometry = Geometry(
        bs=tuple(d.get("bs_xy", geo.bs)),
        irs=tuple(d.get("irs_xy", geo.irs)),
        user_center=tuple(d.get("user_center", geo.user_center)),
        user_radius=float(d.get("user_radius", geo.user_radius)),
    )
    alphabet = d.get("alphabet", "cp")
    if not isinstance(alphabet, PhaseAlphabet):
        alphabet = PhaseAlphabet.parse(str(alphabet))
    return SystemConfig(
        M=int(d.get("M", base.M)),
        K=K,
        N=int(d.get("N", base.N)),
        eta=float(d.get("eta", base.eta)),
        sigma2=tuple(sigma2),
        p_max=p_max,
        alphabet=alphabet,
        geometry=geometry,
        pathloss=pathloss,
    )


def config_to_dict(cfg: SystemConfig) -> dict[str, Any]:
    """Flat, JSON-compatible view of ``cfg`` (linear units)."""
    out: dict[str, Any] = {
        "M": cfg.M,
        "K": cfg.K,
        "N": cfg.N,
        "eta": cfg.eta,
        "sigma2": list(cfg.sigma2) if len(set(cfg.sigma2)) > 1 else cfg.sigma2[0],
        "p_max": cfg.p_max,
        "alphabet": str(cfg.alphabet),
        "bs_xy": list(cfg.geometry.bs),
        "irs_xy": list(cfg.geometry.irs),
        "user_center": list(cfg.geometry.user_center),
        "user_radius": cfg.geometry.user_radius,
    }
    out.update(dataclasses.asdict(cfg.pathloss))
    return out


def load_config(path) -> tuple[SystemConfig, dict[str, Any]]:
    """Read a JSON config file; returns the system config and the raw mapping."""
    with open(path) as fh:
        raw = json.load(fh)
    return config_from_dict(raw), raw
