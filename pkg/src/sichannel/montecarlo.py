"""Monte-Carlo impedance-tolerance ensembles for a long stripline.

Two families are produced: a deterministic sweep of uniform lines whose
impedance is evenly spaced across ``[z_min, z_max]``, and randomly segmented
lines whose segment impedances and lengths are drawn per case.

Random numbers come from numpy's PCG64 bit generator. Each case ``k`` gets its
own stream seeded by ``SeedSequence([seed, k])``, so an ensemble is
bit-reproducible and independent of evaluation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import insertion_loss, return_loss
from .channel import ChannelSpec, LineSegment, synthesize_channel
from .netparams import Network, check_grid, default_grid, linear_grid
from .units import MM_PER_INCH

__all__ = [
    "MonteCarloConfig",
    "EnsembleResult",
    "Envelope",
    "case_rng",
    "run_uniform_sweep",
    "run_segmented",
    "summarize",
    "conductor_loss_for_impedance",
    "config_from_dict",
]


@dataclass
class MonteCarloConfig:
    """Ensemble settings. Lengths in mm, impedances in ohm.

    ``kc``, ``loss_tangent`` and ``dk_eff`` describe the nominal line at
    ``z_nominal``; they are typical low-loss laminate values, not measured
    ones. With ``width_tracks_impedance`` the conductor loss of each segment
    is rescaled for its impedance (see :func:`conductor_loss_for_impedance`).
    ``common_lengths`` draws one length partition shared by every case.
    """

    n_cases: int = 31
    total_length: float = 10 * MM_PER_INCH
    n_segments: int = 10
    z_min: float = 45.0
    z_max: float = 55.0
    seed: int = 0
    dk_eff: float = 3.0
    loss_tangent: float = 0.002
    kc: float = 0.003
    z_nominal: float = 50.0
    width_tracks_impedance: bool = True
    common_lengths: bool = False
    z_ref: float = 50.0
    grid: np.ndarray = field(default_factory=default_grid)

    def __post_init__(self):
        if self.n_cases < 1:
            raise ValueError("n_cases must be >= 1")
        if self.n_segments < 1:
            raise ValueError("n_segments must be >= 1")
        if not 0 < self.z_min <= self.z_max:
            raise ValueError("need 0 < z_min <= z_max")
        if not self.total_length > 0:
            raise ValueError("total_length must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.grid = check_grid(self.grid)


@dataclass
class Envelope:
    """Per-frequency statistics over the cases, each of shape (F,)."""

    min: np.ndarray
    max: np.ndarray
    mean: np.ndarray
    std: np.ndarray


@dataclass
class EnsembleResult:
    f: np.ndarray
    networks: list
    impedances: list
    lengths: list
    il: Envelope = None
    rl: Envelope = None


def case_rng(seed, index):
    """Independent PCG64 generator for case ``index`` of ensemble ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def conductor_loss_for_impedance(kc, z, z_nominal, dk_eff):
    """Conductor loss coefficient of a stripline retargeted from ``z_nominal`` to ``z``.

    For a stripline Z0 ~ (60/sqrt(dk)) ln(k/w), so the width scales as
    exp(-(z - z_nominal)/K) with K = 60/sqrt(dk). Series resistance goes as
    1/width and alpha_c = R/(2 Z0), giving
    ``kc * exp((z - z_nominal)/K) * z_nominal / z``.
    """
    k = 60.0 / math.sqrt(dk_eff)
    return kc * math.exp((z - z_nominal) / k) * z_nominal / z


def _segment(cfg, length, z):
    kc = cfg.kc
    if cfg.width_tracks_impedance:
        kc = conductor_loss_for_impedance(cfg.kc, z, cfg.z_nominal, cfg.dk_eff)
    return LineSegment(length, z, cfg.dk_eff, cfg.loss_tangent, kc)


def _synth(cfg, segments):
    return synthesize_channel(ChannelSpec(segments, z_ref=cfg.z_ref, grid=cfg.grid))


def _partition(rng, cfg):
    """Breakpoints 0 = c0 < c1 < ... < cn = total_length of a normalised-uniform partition."""
    u = rng.uniform(0.0, 1.0, cfg.n_segments)
    cuts = np.concatenate(([0.0], cfg.total_length * np.cumsum(u) / u.sum()))
    cuts[-1] = cfg.total_length
    return cuts


def _segments(cfg, cuts, z):
    """One line per run of equal impedance; merging is exact (segment splitting)
    and makes a degenerate ensemble bit-identical to the uniform line."""
    segs, start = [], 0
    for k in range(1, len(z) + 1):
        if k == len(z) or z[k] != z[start]:
            segs.append(_segment(cfg, float(cuts[k] - cuts[start]), float(z[start])))
            start = k
    return segs


def run_uniform_sweep(cfg: MonteCarloConfig) -> EnsembleResult:
    """Single-segment full-length lines, impedance evenly spaced over [z_min, z_max]."""
    zs = np.linspace(cfg.z_min, cfg.z_max, cfg.n_cases)
    nets = [_synth(cfg, [_segment(cfg, cfg.total_length, float(z))]) for z in zs]
    result = EnsembleResult(
        cfg.grid.copy(), nets, [[float(z)] for z in zs], [[cfg.total_length]] * cfg.n_cases
    )
    return summarize(result)


def run_segmented(cfg: MonteCarloConfig) -> EnsembleResult:
    """Lines of ``n_segments`` pieces with i.i.d. uniform impedances and lengths
    from a normalised uniform partition of ``total_length``."""
    shared = _partition(case_rng(cfg.seed, 2**32), cfg) if cfg.common_lengths else None
    nets, imps, lens = [], [], []
    for k in range(cfg.n_cases):
        rng = case_rng(cfg.seed, k)
        z = rng.uniform(cfg.z_min, cfg.z_max, cfg.n_segments)
        cuts = shared if shared is not None else _partition(rng, cfg)
        nets.append(_synth(cfg, _segments(cfg, cuts, z)))
        imps.append(z.tolist())
        lens.append(np.diff(cuts).tolist())
    return summarize(EnsembleResult(cfg.grid.copy(), nets, imps, lens))


def _envelope(values):
    return Envelope(
        values.min(axis=0), values.max(axis=0), values.mean(axis=0), values.std(axis=0)
    )


def summarize(result: EnsembleResult) -> EnsembleResult:
    """Fill in IL and RL envelopes (population standard deviation)."""
    if not result.networks:
        raise ValueError("ensemble is empty")
    il = np.array([insertion_loss(n).values for n in result.networks])
    rl = np.array([return_loss(n).values for n in result.networks])
    result.il = _envelope(il)
    result.rl = _envelope(rl)
    return result


def envelope_csv(result: EnsembleResult) -> str:
    cols = ["freq_hz"]
    arrays = [result.f]
    for name, env in (("il", result.il), ("rl", result.rl)):
        for stat in ("min", "max", "mean", "std"):
            cols.append(f"{name}_{stat}_db")
            arrays.append(getattr(env, stat))
    rows = [",".join(cols)]
    for vals in zip(*(a.tolist() for a in arrays)):
        rows.append(",".join(repr(v) for v in vals))
    return "\n".join(rows) + "\n"


def config_from_dict(doc) -> MonteCarloConfig:
    """Build a config from its JSON form (keys carry unit suffixes)."""
    from .schemas import MONTECARLO_SCHEMA, validate

    validate(doc, MONTECARLO_SCHEMA)
    kw = {}
    mapping = {
        "n_cases": "n_cases",
        "n_segments": "n_segments",
        "z_min_ohm": "z_min",
        "z_max_ohm": "z_max",
        "seed": "seed",
        "dk_eff": "dk_eff",
        "loss_tangent": "loss_tangent",
        "kc_db_per_mm_sqrt_ghz": "kc",
        "z_nominal_ohm": "z_nominal",
        "width_tracks_impedance": "width_tracks_impedance",
        "common_lengths": "common_lengths",
        "z_ref_ohm": "z_ref",
    }
    for key, attr in mapping.items():
        if key in doc:
            kw[attr] = doc[key]
    if "total_length_mm" in doc and "total_length_inch" in doc:
        raise ValueError("$: give only one of total_length_mm / total_length_inch")
    if "total_length_mm" in doc:
        kw["total_length"] = float(doc["total_length_mm"])
    elif "total_length_inch" in doc:
        kw["total_length"] = float(doc["total_length_inch"]) * MM_PER_INCH
    if "grid" in doc:
        g = doc["grid"]
        kw["grid"] = (
            check_grid(g["points_hz"])
            if "points_hz" in g
            else linear_grid(g["fmin_hz"], g["fmax_hz"], g["step_hz"])
        )
    return MonteCarloConfig(**kw)


def config_to_dict(cfg: MonteCarloConfig) -> dict:
    d = asdict(cfg)
    grid = d.pop("grid")
    return {
        "n_cases": cfg.n_cases,
        "total_length_mm": cfg.total_length,
        "n_segments": cfg.n_segments,
        "z_min_ohm": cfg.z_min,
        "z_max_ohm": cfg.z_max,
        "seed": cfg.seed,
        "dk_eff": cfg.dk_eff,
        "loss_tangent": cfg.loss_tangent,
        "kc_db_per_mm_sqrt_ghz": cfg.kc,
        "z_nominal_ohm": cfg.z_nominal,
        "width_tracks_impedance": cfg.width_tracks_impedance,
        "common_lengths": cfg.common_lengths,
        "z_ref_ohm": cfg.z_ref,
        "grid": {"points_hz": np.asarray(grid).tolist()},
    }


def summary_dict(result: EnsembleResult, freq_hz=28e9) -> dict:
    """JSON-ready digest: per-case impedances/lengths and envelope values at ``freq_hz``."""
    k = int(np.argmin(np.abs(result.f - freq_hz)))
    at = {}
    for name, env in (("il", result.il), ("rl", result.rl)):
        at[name] = {s: float(getattr(env, s)[k]) for s in ("min", "max", "mean", "std")}
    return {
        "n_cases": len(result.networks),
        "report_freq_hz": float(result.f[k]),
        "at_report_freq_db": at,
        "cases": [
            {"impedances_ohm": z, "lengths_mm": ln}
            for z, ln in zip(result.impedances, result.lengths)
        ],
    }
