"""Fiber-weave skew statistics and channel skew budgeting.

The weave is a two-level periodic permittivity across the board: a fraction
``duty`` of every ``pitch`` is glass bundle at ``dk_high`` and the rest resin
at ``dk_low``. A trace routed at ``rotation`` degrees to the bundles sweeps
laterally as it runs, so its delay averages over the profile. P and N are the
same line shifted laterally by the pair pitch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .units import C_MM_PER_PS, MM_PER_INCH, MM_PER_MIL

__all__ = [
    "WeaveModel",
    "Contributor",
    "SkewBudget",
    "FwsEnsemble",
    "ui",
    "budget",
    "line_delay",
    "fws_sample",
    "fws_ensemble",
    "budget_report",
    "three_sigma_from_range",
    "default_weave",
    "weave_from_dict",
    "budget_from_dict",
]


@dataclass(frozen=True)
class WeaveModel:
    """Two-level weave under a differential pair. Lengths in mm, angle in degrees."""

    pitch: float
    dk_high: float
    dk_low: float
    duty: float = 0.5
    rotation: float = 0.0
    line_length: float = 4.2 * MM_PER_INCH
    pair_pitch: float = 12 * MM_PER_MIL

    def __post_init__(self):
        if not self.pitch > 0:
            raise ValueError("pitch must be > 0")
        if not self.dk_high >= self.dk_low >= 1:
            raise ValueError("need dk_high >= dk_low >= 1")
        if not 0 <= self.duty <= 1:
            raise ValueError("duty must lie in [0, 1]")
        if not 0 <= self.rotation < 90:
            raise ValueError("rotation must lie in [0, 90) degrees")
        if not self.line_length > 0:
            raise ValueError("line_length must be > 0")
        if self.pair_pitch < 0:
            raise ValueError("pair_pitch must be >= 0")

    def with_rotation(self, rotation):
        return WeaveModel(
            self.pitch, self.dk_high, self.dk_low, self.duty, rotation, self.line_length, self.pair_pitch
        )


def ui(bitrate) -> float:
    """Unit interval in ps."""
    if not bitrate > 0:
        raise ValueError("bitrate must be > 0")
    return 1e12 / bitrate


def budget(bitrate, fraction=0.2) -> float:
    """Skew budget in ps: ``fraction`` of a unit interval."""
    return fraction * ui(bitrate)


def _high_measure(x, model):
    """Lateral measure of glass in [0, x] (vectorised, x may be negative)."""
    p, hp = model.pitch, model.duty * model.pitch
    n = np.floor(x / p)
    return n * hp + np.minimum(x - n * p, hp)


def line_delay(model: WeaveModel, x0) -> np.ndarray:
    """Delay in ps of a line starting at lateral position ``x0`` (mm).

    Exact integral of sqrt(dk) along the path; at zero rotation the line sits
    entirely in one region.
    """
    x0 = np.asarray(x0, dtype=float)
    rh, rl = math.sqrt(model.dk_high), math.sqrt(model.dk_low)
    length = model.line_length
    theta = math.radians(model.rotation)
    if theta == 0.0:
        frac = np.mod(x0, model.pitch) / model.pitch
        in_glass = frac < model.duty
        return np.where(in_glass, rh, rl) * length / C_MM_PER_PS
    span = length * math.sin(theta)
    glass = (_high_measure(x0 + span, model) - _high_measure(x0, model)) / math.sin(theta)
    return (rl * length + (rh - rl) * glass) / C_MM_PER_PS


def _pair_skew(model, x0):
    return line_delay(model, x0) - line_delay(model, x0 + model.pair_pitch)


def _sample_rng(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def fws_sample(model: WeaveModel, seed, index=0) -> float:
    """Skew (ps, P minus N) of one pair with a random lateral start over one pitch.

    Sample ``index`` of :func:`fws_ensemble` with the same seed is this value.
    """
    x0 = _sample_rng(seed, index).uniform(0.0, model.pitch)
    return float(_pair_skew(model, x0))


@dataclass
class FwsEnsemble:
    samples: np.ndarray = field(repr=False)
    mean: float
    sigma: float


def fws_ensemble(model: WeaveModel, n, seed) -> FwsEnsemble:
    """``n`` independent pairs; ``sigma`` is the sample standard deviation."""
    if n < 2:
        raise ValueError("ensemble needs n >= 2")
    x0 = np.array([_sample_rng(seed, i).uniform(0.0, model.pitch) for i in range(n)])
    s = _pair_skew(model, x0)
    return FwsEnsemble(s, float(s.mean()), float(s.std(ddof=1)))


# -- budget ---------------------------------------------------------------------


@dataclass(frozen=True)
class Contributor:
    name: str
    ps: float
    combination: str = "linear"

    def __post_init__(self):
        if self.ps < 0:
            raise ValueError(f"contributor {self.name!r}: ps must be >= 0")
        if self.combination not in ("linear", "rss"):
            raise ValueError(f"contributor {self.name!r}: combination must be linear or rss")


@dataclass
class SkewBudget:
    bitrate: float = 56e9
    budget_fraction: float = 0.2
    contributors: list = field(default_factory=list)

    def __post_init__(self):
        if not 0 < self.budget_fraction <= 1:
            raise ValueError("budget_fraction must lie in (0, 1]")
        if not self.bitrate > 0:
            raise ValueError("bitrate must be > 0")


def budget_report(b: SkewBudget) -> dict:
    """Linear contributors add, rss contributors combine root-sum-square, and
    the two partial totals add."""
    lin = math.fsum(c.ps for c in b.contributors if c.combination == "linear")
    rss = math.sqrt(math.fsum(c.ps**2 for c in b.contributors if c.combination == "rss"))
    total = lin + rss
    limit = budget(b.bitrate, b.budget_fraction)
    return {
        "ui_ps": ui(b.bitrate),
        "budget_ps": limit,
        "linear_ps": lin,
        "rss_ps": rss,
        "total_ps": total,
        "margin_ps": limit - total,
        "fraction_used": total / limit,
        "pass": total <= limit,
    }


def three_sigma_from_range(lo, hi) -> float:
    """Three times the midpoint of a range of 1-sigma skews."""
    if not 0 <= lo <= hi:
        raise ValueError("need 0 <= lo <= hi")
    return 3.0 * (lo + hi) / 2.0


# -- JSON -------------------------------------------------------------------------


def weave_from_dict(doc, base: WeaveModel | None = None) -> WeaveModel:
    """Overlay a JSON weave document on ``base`` (the calibrated defaults)."""
    from .schemas import WEAVE_SCHEMA, validate

    validate(doc, WEAVE_SCHEMA)
    base = base or default_weave()
    kw = {
        "pitch": doc.get("pitch_mm", base.pitch),
        "dk_high": doc.get("dk_high", base.dk_high),
        "dk_low": doc.get("dk_low", base.dk_low),
        "duty": doc.get("duty", base.duty),
        "rotation": doc.get("rotation_deg", base.rotation),
        "line_length": base.line_length,
        "pair_pitch": base.pair_pitch,
    }
    if "line_length_mm" in doc:
        kw["line_length"] = doc["line_length_mm"]
    elif "line_length_inch" in doc:
        kw["line_length"] = doc["line_length_inch"] * MM_PER_INCH
    if "pair_pitch_mm" in doc:
        kw["pair_pitch"] = doc["pair_pitch_mm"]
    elif "pair_pitch_mil" in doc:
        kw["pair_pitch"] = doc["pair_pitch_mil"] * MM_PER_MIL
    return WeaveModel(**{k: float(v) for k, v in kw.items()})


def weave_to_dict(model: WeaveModel) -> dict:
    return {
        "pitch_mm": model.pitch,
        "dk_high": model.dk_high,
        "dk_low": model.dk_low,
        "duty": model.duty,
        "rotation_deg": model.rotation,
        "line_length_mm": model.line_length,
        "pair_pitch_mm": model.pair_pitch,
    }


def default_weave(rotation=0.0) -> WeaveModel:
    """Calibrated defaults from ``data/fws_defaults.json``.

    The constants are fitted so the model's 1-sigma skew over 1000 pairs lands
    in the measured windows for unrotated and 10-degree artwork; they are not
    material data for any glass style.
    """
    doc = json.loads(resources.files("sichannel.data").joinpath("fws_defaults.json").read_text())
    model = weave_from_dict({k: v for k, v in doc.items() if not k.startswith("_")}, base=_FALLBACK)
    return model.with_rotation(rotation)


_FALLBACK = WeaveModel(pitch=1.0, dk_high=3.2, dk_low=3.0)


def budget_from_dict(doc) -> SkewBudget:
    from .schemas import BUDGET_SCHEMA, validate

    validate(doc, BUDGET_SCHEMA)
    return SkewBudget(
        bitrate=float(doc.get("bitrate_bps", 56e9)),
        budget_fraction=float(doc.get("budget_fraction", 0.2)),
        contributors=[
            Contributor(c["name"], float(c["ps"]), c.get("combination", "linear"))
            for c in doc["contributors"]
        ],
    )
