"""Frequency-domain channel synthesis by ABCD cascading.

A channel is an ordered list of elements, each reduced to a 2x2 ABCD matrix per
frequency. Lengths are in mm, capacitance in fF, inductance in pH and
frequency in Hz.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .netparams import Network, check_grid, default_grid, linear_grid
from .units import C_MM_PER_S, MM_PER_MIL, db_to_neper

__all__ = [
    "LineSegment",
    "ViaElement",
    "LumpedElement",
    "ChannelSpec",
    "abcd_line",
    "abcd_open_stub",
    "abcd_shunt",
    "abcd_series",
    "cascade",
    "abcd_to_s",
    "synthesize_channel",
    "uncoupled_pair",
    "terminate",
    "channel_spec_from_dict",
    "channel_spec_to_dict",
    "load_channel_spec",
    "stub_resonance",
]


def _check_nonneg(name, value):
    if not value >= 0:
        raise ValueError(f"{name} must be >= 0, got {value}")


def _check_pos(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class LineSegment:
    """Uniform lossy transmission line.

    ``kc`` is the conductor loss in dB/mm at 1 GHz; it scales with sqrt(f).
    """

    length: float
    z0: float = 50.0
    dk_eff: float = 3.0
    loss_tangent: float = 0.0
    kc: float = 0.0

    def __post_init__(self):
        _check_nonneg("length", self.length)
        _check_pos("z0", self.z0)
        if not self.dk_eff >= 1:
            raise ValueError(f"dk_eff must be >= 1, got {self.dk_eff}")
        _check_nonneg("loss_tangent", self.loss_tangent)
        _check_nonneg("kc", self.kc)

    def abcd(self, f):
        return abcd_line(self, f)


@dataclass(frozen=True)
class ViaElement:
    """Via barrel with an optional open stub below the exit layer.

    The barrel is a short line of impedance ``barrel_z0`` split in two halves
    around the lumped ``excess_shunt_c``. The stub hangs off the exit point and
    is terminated at the drill end by ``pad_shunt_c`` (the terminating pad);
    with no stub the pad sits directly at the exit point. ``dk_z`` is the
    out-of-plane permittivity seen along the barrel.
    """

    barrel_length: float
    barrel_z0: float = 50.0
    stub_length: float = 0.0
    stub_z0: float = 50.0
    dk_z: float = 3.5
    excess_shunt_c: float = 0.0
    pad_shunt_c: float = 0.0
    loss_tangent: float = 0.0

    def __post_init__(self):
        _check_nonneg("barrel_length", self.barrel_length)
        _check_nonneg("stub_length", self.stub_length)
        _check_pos("barrel_z0", self.barrel_z0)
        _check_pos("stub_z0", self.stub_z0)
        if not self.dk_z >= 1:
            raise ValueError(f"dk_z must be >= 1, got {self.dk_z}")
        _check_nonneg("excess_shunt_c", self.excess_shunt_c)
        _check_nonneg("pad_shunt_c", self.pad_shunt_c)
        _check_nonneg("loss_tangent", self.loss_tangent)

    def abcd(self, f):
        half = LineSegment(
            self.barrel_length / 2.0, self.barrel_z0, self.dk_z, self.loss_tangent
        )
        h = abcd_line(half, f)
        c = abcd_shunt(2j * np.pi * np.asarray(f, dtype=float) * self.excess_shunt_c * 1e-15)
        stub = abcd_open_stub(
            self.stub_length,
            self.stub_z0,
            self.dk_z,
            self.loss_tangent,
            f,
            load_c=self.pad_shunt_c,
        )
        return h @ c @ h @ stub


@dataclass(frozen=True)
class LumpedElement:
    """Shunt capacitance (``kind="shunt_c"``, fF) or series inductance
    (``kind="series_l"``, pH)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("shunt_c", "series_l"):
            raise ValueError(f"unknown lumped kind {self.kind!r}")
        _check_nonneg("value", self.value)

    def abcd(self, f):
        w = 2 * np.pi * np.asarray(f, dtype=float)
        if self.kind == "shunt_c":
            return abcd_shunt(1j * w * self.value * 1e-15)
        return abcd_series(1j * w * self.value * 1e-12)


Element = Union[LineSegment, ViaElement, LumpedElement]


@dataclass
class ChannelSpec:
    elements: list
    z_ref: float = 50.0
    grid: np.ndarray = field(default_factory=default_grid)

    def __post_init__(self):
        self.elements = list(self.elements)
        self.grid = check_grid(self.grid)
        _check_pos("z_ref", self.z_ref)


# -- ABCD building blocks ---------------------------------------------------------


def _abcd(a, b, c, d):
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def abcd_shunt(y):
    """Shunt admittance ``y`` (S)."""
    y = np.asarray(y, dtype=complex)
    return _abcd(1.0, 0.0, y, 1.0)


def abcd_series(z):
    """Series impedance ``z`` (ohm)."""
    z = np.asarray(z, dtype=complex)
    return _abcd(1.0, z, 0.0, 1.0)


def _gamma(f, dk, loss_tangent, kc):
    """Propagation constant in 1/mm."""
    f = np.asarray(f, dtype=float)
    beta = 2 * np.pi * f * np.sqrt(dk) / C_MM_PER_S
    alpha_d = beta / 2.0 * loss_tangent
    alpha_c = db_to_neper(kc) * np.sqrt(f / 1e9)
    return alpha_d + alpha_c + 1j * beta


def abcd_line(seg: LineSegment, f):
    """ABCD of a lossy line; dielectric loss linear in f, conductor loss in sqrt(f)."""
    gl = _gamma(f, seg.dk_eff, seg.loss_tangent, seg.kc) * seg.length
    ch, sh = np.cosh(gl), np.sinh(gl)
    return _abcd(ch, seg.z0 * sh, sh / seg.z0, ch)


def abcd_open_stub(stub_length, stub_z0, dk_z, loss_tangent, f, load_c=0.0):
    """Shunt ABCD of an open-circuited stub, optionally end-loaded by ``load_c`` fF.

    Unloaded the input admittance is ``tanh(gamma * l) / stub_z0``.
    """
    f = np.asarray(f, dtype=float)
    t = np.tanh(_gamma(f, dk_z, loss_tangent, 0.0) * stub_length)
    y0 = 1.0 / stub_z0
    yl = 2j * np.pi * f * load_c * 1e-15
    y = y0 * (yl + y0 * t) / (y0 + yl * t)
    return abcd_shunt(y)


def stub_resonance(stub_length, dk_z):
    """Quarter-wave resonance (Hz) of an open stub of ``stub_length`` mm."""
    _check_pos("stub_length", stub_length)
    return C_MM_PER_S / (4.0 * stub_length * np.sqrt(dk_z))


def cascade(elements, f) -> np.ndarray:
    """Product of the element ABCD matrices, shape (F, 2, 2)."""
    f = np.asarray(f, dtype=float)
    total = np.broadcast_to(np.eye(2, dtype=complex), f.shape + (2, 2)).copy()
    for el in elements:
        total = total @ el.abcd(f)
    return total


def abcd_to_s(abcd, z_ref=50.0) -> np.ndarray:
    """Convert ABCD matrices to 2-port S-parameters with real reference ``z_ref``."""
    a, b = abcd[..., 0, 0], abcd[..., 0, 1]
    c, d = abcd[..., 1, 0], abcd[..., 1, 1]
    bz, cz = b / z_ref, c * z_ref
    den = a + bz + cz + d
    s = np.empty(abcd.shape, dtype=complex)
    s[..., 0, 0] = (a + bz - cz - d) / den
    s[..., 0, 1] = 2 * (a * d - b * c) / den
    s[..., 1, 0] = 2 / den
    s[..., 1, 1] = (-a + bz - cz + d) / den
    return s


def synthesize_channel(spec: ChannelSpec) -> Network:
    """Cascade the spec's elements on its grid and return a 2-port Network."""
    if not spec.elements:
        raise ValueError("channel spec has no elements")
    s = abcd_to_s(cascade(spec.elements, spec.grid), spec.z_ref)
    return Network(spec.grid.copy(), s, z_ref=spec.z_ref)


def terminate(net: Network, z_load) -> Network:
    """Load port 2 of a 2-port with ``z_load`` ohm and return the 1-port seen at port 1."""
    if net.ports != 2:
        raise ValueError("terminate needs a 2-port network")
    gl = (z_load - net.z_ref) / (z_load + net.z_ref)
    s11, s12, s21, s22 = net.s[:, 0, 0], net.s[:, 0, 1], net.s[:, 1, 0], net.s[:, 1, 1]
    gin = s11 + s12 * s21 * gl / (1 - s22 * gl)
    return Network(net.f.copy(), gin, z_ref=net.z_ref)


def uncoupled_pair(p: Network, n: Network) -> Network:
    """Place two independent 2-ports side by side as a 4-port.

    P occupies ports 1->2 and N ports 3->4, matching the default pairing.
    """
    if p.ports != 2 or n.ports != 2:
        raise ValueError("uncoupled_pair needs two 2-port networks")
    if p.f.shape != n.f.shape or not np.array_equal(p.f, n.f):
        raise ValueError("P and N networks must share a grid")
    s = np.zeros((p.f.size, 4, 4), dtype=complex)
    s[:, :2, :2] = p.s
    s[:, 2:, 2:] = n.s
    return Network(p.f.copy(), s, z_ref=p.z_ref)


# -- JSON -------------------------------------------------------------------------

# field name -> (attribute, unit scale to internal units)
_LENGTH_KEYS = {"_mm": 1.0, "_mil": MM_PER_MIL}

_LINE_FIELDS = {
    "length": ("length", True),
    "z0": ("z0_ohm", False),
    "dk_eff": ("dk_eff", False),
    "loss_tangent": ("loss_tangent", False),
    "kc": ("kc_db_per_mm_sqrt_ghz", False),
}
_VIA_FIELDS = {
    "barrel_length": ("barrel_length", True),
    "barrel_z0": ("barrel_z0_ohm", False),
    "stub_length": ("stub_length", True),
    "stub_z0": ("stub_z0_ohm", False),
    "dk_z": ("dk_z", False),
    "excess_shunt_c": ("excess_shunt_c_ff", False),
    "pad_shunt_c": ("pad_shunt_c_ff", False),
    "loss_tangent": ("loss_tangent", False),
}


def _read_fields(doc, table, path):
    kwargs = {}
    for attr, (key, is_length) in table.items():
        if is_length:
            hits = [(key + suf, scale) for suf, scale in _LENGTH_KEYS.items() if key + suf in doc]
            if len(hits) > 1:
                raise ValueError(f"{path}: give only one of {key}_mm / {key}_mil")
            if hits:
                k, scale = hits[0]
                kwargs[attr] = float(doc[k]) * scale
        elif key in doc:
            kwargs[attr] = float(doc[key])
    return kwargs


def _element_from_dict(doc, path):
    kind = doc.get("kind")
    if kind == "line":
        return LineSegment(**_read_fields(doc, _LINE_FIELDS, path))
    if kind == "via":
        return ViaElement(**_read_fields(doc, _VIA_FIELDS, path))
    if kind == "shunt_c":
        return LumpedElement("shunt_c", float(doc["value_ff"]))
    if kind == "series_l":
        return LumpedElement("series_l", float(doc["value_ph"]))
    raise ValueError(f"{path}.kind: unknown element kind {kind!r}")


def _grid_from_dict(doc):
    if doc is None:
        return default_grid()
    if "points_hz" in doc:
        return check_grid(doc["points_hz"])
    return linear_grid(doc["fmin_hz"], doc["fmax_hz"], doc["step_hz"])


def channel_spec_from_dict(doc) -> ChannelSpec:
    """Build a ChannelSpec from its JSON document form (see docs/channel_spec.md)."""
    from .schemas import validate, CHANNEL_SPEC_SCHEMA

    validate(doc, CHANNEL_SPEC_SCHEMA)
    elements = [
        _element_from_dict(el, f"$.elements[{i}]") for i, el in enumerate(doc["elements"])
    ]
    return ChannelSpec(
        elements, z_ref=float(doc.get("z_ref_ohm", 50.0)), grid=_grid_from_dict(doc.get("grid"))
    )


def load_channel_spec(path) -> ChannelSpec:
    with open(path) as fh:
        return channel_spec_from_dict(json.load(fh))


def _element_to_dict(el):
    if isinstance(el, LineSegment):
        return {
            "kind": "line",
            "length_mm": el.length,
            "z0_ohm": el.z0,
            "dk_eff": el.dk_eff,
            "loss_tangent": el.loss_tangent,
            "kc_db_per_mm_sqrt_ghz": el.kc,
        }
    if isinstance(el, ViaElement):
        return {
            "kind": "via",
            "barrel_length_mm": el.barrel_length,
            "barrel_z0_ohm": el.barrel_z0,
            "stub_length_mm": el.stub_length,
            "stub_z0_ohm": el.stub_z0,
            "dk_z": el.dk_z,
            "excess_shunt_c_ff": el.excess_shunt_c,
            "pad_shunt_c_ff": el.pad_shunt_c,
            "loss_tangent": el.loss_tangent,
        }
    if el.kind == "shunt_c":
        return {"kind": "shunt_c", "value_ff": el.value}
    return {"kind": "series_l", "value_ph": el.value}


def channel_spec_to_dict(spec: ChannelSpec) -> dict:
    return {
        "z_ref_ohm": spec.z_ref,
        "grid": {"points_hz": spec.grid.tolist()},
        "elements": [_element_to_dict(el) for el in spec.elements],
    }
