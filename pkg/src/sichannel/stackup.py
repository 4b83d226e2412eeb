"""PCB stack-up geometry: thickness, via spans and stubs, delay, stripline
impedance estimates and layer-registration comb decoding.

Thicknesses are in mil throughout this module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

from .units import C_MM_PER_PS

__all__ = [
    "Dielectric",
    "Layer",
    "Drill",
    "Stackup",
    "ViaSpan",
    "CombStructure",
    "total_thickness",
    "layer_depth",
    "via_span",
    "via_stub_matrix",
    "delay_per_length",
    "stripline_z0_estimate",
    "comb_decode",
    "registration_offset",
    "load_stackup",
    "stackup_from_dict",
    "bundled_stackup",
    "bundled_registration",
]


@dataclass(frozen=True)
class Dielectric:
    material: str
    thickness: float
    dk: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.thickness < 0:
            raise ValueError("dielectric thickness must be >= 0")
        if self.dk is not None and self.dk < 1:
            raise ValueError("dk must be >= 1")


@dataclass(frozen=True)
class Layer:
    """One record of the layer table.

    Copper layers carry a 1-based ``index`` counted from the top. Soldermask
    records have no copper and ``index=None``.
    """

    index: int | None
    usage: str
    copper_thickness: float = 0.0
    dielectric_below: Dielectric | None = None
    copper_weight: float | None = None
    note: str = ""

    def __post_init__(self):
        if self.usage not in ("traces", "plane", "soldermask"):
            raise ValueError(f"unknown layer usage {self.usage!r}")
        if self.copper_thickness < 0:
            raise ValueError("copper thickness must be >= 0")

    @property
    def dielectric_thickness(self):
        return self.dielectric_below.thickness if self.dielectric_below else 0.0


@dataclass(frozen=True)
class Drill:
    name: str
    start: int
    stop: int
    kind: str = ""
    diameter: float | None = None
    note: str = ""


@dataclass
class Stackup:
    layers: list
    drills: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        indices = [ly.index for ly in self.layers if ly.index is not None]
        if len(set(indices)) != len(indices):
            raise ValueError("duplicate copper layer index")
        known = set(indices)
        for d in self.drills.values():
            if d.start not in known or d.stop not in known:
                raise ValueError(f"drill {d.name!r} references a missing layer")
            if d.start == d.stop:
                raise ValueError(f"drill {d.name!r} has zero span")

    def layer(self, index) -> Layer:
        for ly in self.layers:
            if ly.index == index:
                return ly
        raise KeyError(f"no copper layer L{index}")


@dataclass(frozen=True)
class ViaSpan:
    barrel: float
    stub: float


def total_thickness(stackup: Stackup) -> float:
    """Sum of every copper and dielectric thickness, soldermask included."""
    return math.fsum(ly.copper_thickness + ly.dielectric_thickness for ly in stackup.layers)


def layer_depth(stackup: Stackup, index) -> float:
    """Depth of the copper midplane of ``L<index>`` below the top surface."""
    depth = 0.0
    for ly in stackup.layers:
        if ly.index == index:
            return depth + ly.copper_thickness / 2.0
        depth += ly.copper_thickness + ly.dielectric_thickness
    raise KeyError(f"no copper layer L{index}")


def via_span(stackup: Stackup, drill, exit_layer) -> ViaSpan:
    """Barrel length from drill start to ``exit_layer`` and stub beyond it.

    ``drill`` is a :class:`Drill` or the name of one in the stack-up's table.
    Bottom-side drills (start below stop) are measured upward.
    """
    if isinstance(drill, str):
        try:
            drill = stackup.drills[drill]
        except KeyError:
            raise KeyError(f"unknown drill {drill!r}") from None
    lo, hi = sorted((drill.start, drill.stop))
    if not lo <= exit_layer <= hi:
        raise ValueError(
            f"exit layer L{exit_layer} is outside drill {drill.name!r} (L{drill.start}-L{drill.stop})"
        )
    d_start = layer_depth(stackup, drill.start)
    d_stop = layer_depth(stackup, drill.stop)
    d_exit = layer_depth(stackup, exit_layer)
    return ViaSpan(barrel=abs(d_exit - d_start), stub=abs(d_stop - d_exit))


def via_stub_matrix(stackup: Stackup):
    """Rows of (drill, exit layer, barrel mil, stub mil) for every signal layer a
    drill can exit on."""
    rows = []
    for drill in stackup.drills.values():
        lo, hi = sorted((drill.start, drill.stop))
        for ly in stackup.layers:
            if ly.index is None or not lo <= ly.index <= hi:
                continue
            if ly.usage != "traces":
                continue
            span = via_span(stackup, drill, ly.index)
            rows.append((drill.name, ly.index, span.barrel, span.stub))
    return rows


def delay_per_length(dk_eff) -> float:
    """Propagation delay in ps/mm."""
    if dk_eff < 1:
        raise ValueError("dk_eff must be >= 1")
    return math.sqrt(dk_eff) / C_MM_PER_PS


def _symmetric_stripline(w, b, t, dk):
    """Wheeler's centred-stripline formula with finite strip thickness.

    ``b`` is the full ground-to-ground spacing.
    """
    x = t / b
    if x > 0:
        m = 2.0 / (1.0 + (2.0 / 3.0) * x / (1.0 - x))
        dw = (x / (math.pi * (1.0 - x))) * (
            1.0 - 0.5 * math.log((x / (2.0 - x)) ** 2 + (0.0796 * x / (w / b + 1.1 * x)) ** m)
        ) * b
    else:
        dw = 0.0
    wp = (w + dw) / (b - t)
    a = 8.0 / (math.pi * wp)
    return 30.0 / math.sqrt(dk) * math.log(1.0 + (4.0 / (math.pi * wp)) * (a + math.sqrt(a * a + 6.27)))


def stripline_z0_estimate(width, h_above, h_below, t_copper, dk) -> float:
    """Closed-form stripline impedance (ohm), roughly +/-10 % for ordinary geometry.

    Each side is treated as a centred stripline with ground spacing
    ``2*h + t``; the offset line is the parallel combination
    ``2*Z1*Z2 / (Z1 + Z2)``. Invalid when ``width / min(h_above, h_below) > 4``.
    """
    for name, v in (("width", width), ("h_above", h_above), ("h_below", h_below),
                    ("t_copper", t_copper), ("dk", dk)):
        if not v > 0:
            raise ValueError(f"{name} must be > 0")
    if width / min(h_above, h_below) > 4:
        raise ValueError("approximation invalid for width/h > 4")
    z1 = _symmetric_stripline(width, 2 * h_above + t_copper, t_copper, dk)
    z2 = _symmetric_stripline(width, 2 * h_below + t_copper, t_copper, dk)
    return 2.0 * z1 * z2 / (z1 + z2)


# -- layer registration ----------------------------------------------------------


@dataclass(frozen=True)
class CombStructure:
    """Strips with as-designed incremental misalignment of ``increment`` mil."""

    increment: float
    strip_count: int
    axis: str = "y"

    def __post_init__(self):
        if not self.increment > 0:
            raise ValueError("increment must be > 0")
        if self.strip_count < 3:
            raise ValueError("strip_count must be >= 3")
        if self.axis not in ("x", "y"):
            raise ValueError("axis must be 'x' or 'y'")


def comb_decode(comb: CombStructure, aligned_strip_index, reference_index) -> float:
    """Layer offset in mil from the index of the strip seen aligned under x-ray."""
    for name, idx in (("aligned", aligned_strip_index), ("reference", reference_index)):
        if not 0 <= idx < comb.strip_count:
            raise IndexError(f"{name} strip index {idx} outside 0..{comb.strip_count - 1}")
    return (aligned_strip_index - reference_index) * comb.increment


def registration_offset(x, y) -> float:
    """Absolute offset sqrt(x^2 + y^2), rounded half-up to 0.1 mil."""
    return math.floor(math.hypot(x, y) * 10.0 + 0.5 + 1e-9) / 10.0


# -- fixtures -------------------------------------------------------------------


def stackup_from_dict(doc) -> Stackup:
    from .schemas import STACKUP_SCHEMA, validate

    validate(doc, STACKUP_SCHEMA)
    layers = []
    for rec in doc["layers"]:
        d = rec.get("dielectric_below")
        diel = (
            Dielectric(d.get("material", ""), float(d["thickness_mil"]), d.get("dk"), d.get("note", ""))
            if d
            else None
        )
        layers.append(
            Layer(
                rec.get("index"),
                rec["usage"],
                float(rec.get("copper_thickness_mil", 0.0)),
                diel,
                rec.get("copper_weight_oz"),
                rec.get("note", ""),
            )
        )
    drills = {
        d["name"]: Drill(d["name"], d["start"], d["stop"], d.get("kind", ""), d.get("diameter_mil"), d.get("note", ""))
        for d in doc.get("drills", [])
    }
    return Stackup(layers, drills, doc.get("name", ""))


def load_stackup(path) -> Stackup:
    with open(path) as fh:
        return stackup_from_dict(json.load(fh))


def _data(name):
    return json.loads(resources.files("sichannel.data").joinpath(name).read_text())


def bundled_stackup() -> Stackup:
    """The 26-layer two-sub-laminate test-board stack-up shipped with the package."""
    return stackup_from_dict(_data("stackup_56g.json"))


def bundled_registration() -> dict:
    """SN1 layer-registration table: per layer, x/y/absolute offsets at two sites."""
    return _data("registration_sn1.json")
