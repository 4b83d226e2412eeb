"""Figures of merit extracted from networks: IL, RL, BRL, mask compliance, TDR and skew."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .netparams import DEFAULT_PAIRING, Network, parse_pairing

__all__ = [
    "Trace",
    "MaskSpec",
    "ComplianceReport",
    "insertion_loss",
    "return_loss",
    "nyquist",
    "brl",
    "scale_mask",
    "mask_check",
    "load_mask",
    "step_response",
    "tdr",
    "tdr_rho",
    "skew",
    "tdr_pn_difference",
    "group_delay",
    "BRL_FLOOR_DB",
    "DEFAULT_RISETIME_PS",
]

BRL_FLOOR_DB = -200.0
DEFAULT_RISETIME_PS = 7.0
_DB_FLOOR = -400.0
_MAX_DC_EXTRAPOLATION_HZ = 100e6
# 10-90 % span of a Gaussian CDF in units of its sigma
_GAUSS_10_90 = 2.0 * 1.2815515655446004

_UNITS = {
    "IL": ("freq_hz", "il_db"),
    "RL": ("freq_hz", "rl_db"),
    "TDR-impedance": ("time_ps", "z_ohm"),
    "TDR-difference": ("time_ps", "rho_diff"),
    "TDR-rho": ("time_ps", "rho"),
}


@dataclass
class Trace:
    """A sampled curve. ``axis`` is Hz for IL/RL and ps for TDR kinds."""

    axis: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in _UNITS:
            raise ValueError(f"unknown trace kind {self.kind!r}")
        if self.axis.shape != self.values.shape or self.axis.ndim != 1:
            raise ValueError("trace axis and values must be 1-D of equal length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("trace values must be finite")

    @property
    def header(self):
        return _UNITS[self.kind]

    def to_csv(self) -> str:
        """Two-column CSV with a header row, LF line endings."""
        lines = [",".join(self.header)]
        lines += [f"{a!r},{v!r}" for a, v in zip(self.axis.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"


@dataclass
class MaskSpec:
    """Piecewise-linear limit line; effective frequencies are ``freq * scale``."""

    points: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            raise ValueError("mask is empty")
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("mask points must be (freq_hz, limit_db) pairs")
        if pts.shape[0] > 1 and np.any(np.diff(pts[:, 0]) <= 0):
            raise ValueError("mask frequencies must be strictly ascending")
        if not self.scale > 0:
            raise ValueError("mask scale must be > 0")
        self.points = pts

    @property
    def freqs(self):
        return self.points[:, 0] * self.scale

    @property
    def limits(self):
        return self.points[:, 1]


@dataclass
class ComplianceReport:
    passed: bool
    first_violation_freq: float | None
    worst_margin: float
    freqs: np.ndarray = field(repr=False)
    margins: np.ndarray = field(repr=False)
    coverage: float = 1.0

    def to_dict(self):
        return {
            "pass": self.passed,
            "first_violation_freq_hz": self.first_violation_freq,
            "worst_margin_db": self.worst_margin,
            "coverage": self.coverage,
            "covered_band_hz": [float(self.freqs[0]), float(self.freqs[-1])],
            "margins": [[float(f), float(m)] for f, m in zip(self.freqs, self.margins)],
        }


def _db(x):
    mag = np.abs(x)
    with np.errstate(divide="ignore"):
        out = 20.0 * np.log10(mag)
    return np.maximum(out, _DB_FLOOR)


def _require_ports(net, n, what):
    if net.ports != n:
        raise ValueError(f"{what} needs a {n}-port network, got {net.ports}")


def insertion_loss(net: Network) -> Trace:
    """20*log10|S21| in dB."""
    _require_ports(net, 2, "insertion_loss")
    return Trace(net.f.copy(), _db(net.s[:, 1, 0]), "IL")


def return_loss(net: Network) -> Trace:
    """20*log10|S11| in dB; accepts 1-ports as well."""
    if net.ports not in (1, 2):
        raise ValueError(f"return_loss needs a 1- or 2-port network, got {net.ports}")
    return Trace(net.f.copy(), _db(net.s[:, 0, 0]), "RL")


def nyquist(bitrate):
    return bitrate / 2.0


def _trapezoid_weights(f):
    if f.size == 1:
        return np.ones(1)
    w = np.empty_like(f)
    d = np.diff(f)
    w[0], w[-1] = d[0] / 2, d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    return w


def brl(net: Network, bitrate) -> float:
    """Broadband return loss in dB.

    The sinc^2(f/bitrate)-weighted mean of |S11|^2 over the grid points up to
    the Nyquist frequency, expressed as 10*log10. Exact zero reflection reports
    ``BRL_FLOOR_DB``.
    """
    fn = nyquist(bitrate)
    if net.f[-1] < fn * (1 - 1e-9):
        raise ValueError(
            f"grid ends at {net.f[-1]:g} Hz, below the Nyquist frequency {fn:g} Hz"
        )
    band = net.f <= fn * (1 + 1e-9)
    f = net.f[band]
    w = np.sinc(f / bitrate) ** 2 * _trapezoid_weights(f)
    power = np.abs(net.s[band, 0, 0]) ** 2
    mean = float(np.sum(power * w) / np.sum(w))
    if mean <= 0:
        return BRL_FLOOR_DB
    return max(10.0 * math.log10(mean), BRL_FLOOR_DB)


# -- masks ------------------------------------------------------------------------


def scale_mask(mask: MaskSpec, factor) -> MaskSpec:
    """Multiply every mask frequency by ``factor``; limits are unchanged."""
    if not factor > 0:
        raise ValueError("scale factor must be > 0")
    pts = mask.points.copy()
    pts[:, 0] *= factor
    return MaskSpec(pts, mask.scale)


def load_mask(path_or_doc) -> MaskSpec:
    """Read a mask from a JSON array of ``[freq_hz, limit_db]`` or an object
    with ``points`` and optional ``scale``."""
    from .schemas import MASK_SCHEMA, validate

    if isinstance(path_or_doc, (str, bytes)) or hasattr(path_or_doc, "__fspath__"):
        with open(path_or_doc) as fh:
            doc = json.load(fh)
    else:
        doc = path_or_doc
    validate(doc, MASK_SCHEMA)
    if isinstance(doc, dict):
        return MaskSpec(doc["points"], float(doc.get("scale", 1.0)))
    return MaskSpec(doc)


def mask_check(trace: Trace, mask: MaskSpec) -> ComplianceReport:
    """Compare an RL trace against the linearly interpolated limit line.

    Only trace points inside the mask band are judged; ``coverage`` is the
    fraction of trace points that were. A point violates when the trace sits
    above the limit, i.e. when ``limit - value < 0``.
    """
    if trace.kind != "RL":
        raise ValueError(f"mask_check needs an RL trace, got {trace.kind}")
    mf, ml = mask.freqs, mask.limits
    lo, hi = mf[0], mf[-1]
    inside = (trace.axis >= lo) & (trace.axis <= hi)
    if not np.any(inside):
        raise ValueError(
            f"trace band [{trace.axis[0]:g}, {trace.axis[-1]:g}] Hz does not overlap "
            f"mask band [{lo:g}, {hi:g}] Hz"
        )
    f = trace.axis[inside]
    margins = np.interp(f, mf, ml) - trace.values[inside]
    bad = np.nonzero(margins < 0)[0]
    return ComplianceReport(
        passed=bad.size == 0,
        first_violation_freq=float(f[bad[0]]) if bad.size else None,
        worst_margin=float(margins.min()),
        freqs=f,
        margins=margins,
        coverage=float(inside.mean()),
    )


# -- time domain --------------------------------------------------------------------


def group_delay(net: Network, i=2, j=1) -> np.ndarray:
    """Group delay of S_ij in ps."""
    phase = np.unwrap(np.angle(net.sij(i, j)))
    if net.f.size < 2:
        raise ValueError("group delay needs at least two frequencies")
    return -np.gradient(phase, 2 * np.pi * net.f) * 1e12


def _delay_estimate_ps(net: Network, i, j):
    """Rough one-way delay used only for the aliasing guard."""
    if net.f.size < 2:
        return 0.0
    if i == j:
        # reflection phase only yields a round trip
        x = net.sij(i, i)
        scale = 0.5
    else:
        x = net.sij(i, j)
        scale = 1.0
    # per-sample phase turn; a passive delay turns clockwise, so a positive
    # median means the grid undersamples the delay and unwrapping is unreliable
    live = np.abs(x) > 1e-6 * np.max(np.abs(x))
    if np.count_nonzero(live) >= 2:
        xs, fs = x[live], net.f[live]
        turn = np.angle(xs[1:] / xs[:-1]) / (2 * np.pi * np.diff(fs))
        step = -float(np.median(turn)) * 1e12
        if step < -1.0:
            return math.inf
    phase = np.unwrap(np.angle(x))
    slope = np.polyfit(2 * np.pi * net.f, phase, 1)[0]
    return max(0.0, -slope * 1e12 * scale)


def _uniform_spectrum(net: Network, i, j):
    """S_ij on the grid 0, df, 2df, ... fmax with a real DC point prepended."""
    f = net.f
    if f[0] > _MAX_DC_EXTRAPOLATION_HZ:
        raise ValueError(
            f"lowest frequency {f[0]:g} Hz is above {_MAX_DC_EXTRAPOLATION_HZ:g} Hz; "
            "refusing to extrapolate to DC"
        )
    if f.size < 2:
        raise ValueError("time-domain transforms need at least two frequencies")
    x = net.sij(i, j)
    dc = x[0].real - f[0] * (x[1].real - x[0].real) / (f[1] - f[0])
    df = min(f[0], float(np.min(np.diff(f))))
    k = int(math.floor(f[-1] / df * (1 + 1e-12)))
    fu = df * np.arange(k + 1)
    ff = np.concatenate(([0.0], f))
    xx = np.concatenate(([dc], x))
    xu = np.interp(fu, ff, xx.real) + 1j * np.interp(fu, ff, xx.imag)
    xu[0] = dc
    return fu, xu, df


def _edge_filter(fu, risetime_ps):
    """Gaussian edge for the given 10-90 % risetime times a raised-cosine taper
    over the top 10 % of the band."""
    sigma = risetime_ps * 1e-12 / _GAUSS_10_90
    g = np.exp(-2.0 * (np.pi * sigma * fu) ** 2)
    fmax = fu[-1]
    taper = np.ones_like(fu)
    top = fu > 0.9 * fmax
    taper[top] = 0.5 * (1.0 + np.cos(np.pi * (fu[top] - 0.9 * fmax) / (0.1 * fmax)))
    return g * taper


def step_response(net: Network, i, j, risetime_ps=DEFAULT_RISETIME_PS, dt_ps=None):
    """Step response of S_ij (1-based ports) to a Gaussian edge.

    Returns ``(t_ps, step, delay_ps)``. Time zero is the reference plane; the
    record starts a quarter record before it so the zero-phase edge and its
    pre-cursor ringing are not wrapped.
    The step settles to the DC-extrapolated value of S_ij.
    """
    if not risetime_ps > 0:
        raise ValueError("risetime must be > 0")
    fu, xu, df = _uniform_spectrum(net, i, j)
    record_ps = 1e12 / df
    delay = _delay_estimate_ps(net, i, j)
    if record_ps < 4.0 * delay:
        if math.isinf(delay):
            raise ValueError(
                f"grid too sparse: phase of S{i}{j} turns backwards between samples, so the "
                f"delay is aliased in a {record_ps:.1f} ps record"
            )
        raise ValueError(
            f"grid too sparse: record length {record_ps:.1f} ps is shorter than 4x the "
            f"estimated delay {delay:.1f} ps"
        )
    if dt_ps is None:
        dt_ps = risetime_ps / 20.0
    n_fft = 1 << int(math.ceil(math.log2(max(2 * (fu.size - 1), record_ps / dt_ps))))
    spec = np.zeros(n_fft // 2 + 1, dtype=complex)
    spec[: fu.size] = xu * _edge_filter(fu, risetime_ps)
    h = np.fft.irfft(spec, n_fft)
    dt = record_ps / n_fft
    # the band-edge taper leaves a slowly decaying pre-cursor; a quarter record
    # captures it and still leaves 3x the delay estimate after t = 0
    n_pre = max(int(math.ceil(5.0 * risetime_ps / dt)), n_fft // 4)
    step = np.cumsum(np.roll(h, n_pre))
    t = (np.arange(n_fft) - n_pre) * dt
    return t, step, delay


def _window(t, values, delay_ps, risetime_ps, t_stop_ps):
    if t_stop_ps is None:
        t_stop_ps = 5.0 * delay_ps + 20.0 * risetime_ps + 100.0
    t_stop_ps = min(t_stop_ps, t[-1] / 2.0)
    keep = t <= t_stop_ps
    return t[keep], values[keep]


def tdr_rho(net, port=1, risetime_ps=DEFAULT_RISETIME_PS, t_stop_ps=None, dt_ps=None) -> Trace:
    """Reflected step waveform rho(t) at ``port``."""
    if net.ports not in (1, 2, 4):
        raise ValueError(f"tdr needs a 1-, 2- or 4-port network, got {net.ports}")
    t, step, delay = step_response(net, port, port, risetime_ps, dt_ps)
    t, rho = _window(t, step, delay, risetime_ps, t_stop_ps)
    return Trace(t, rho, "TDR-rho")


def tdr(net: Network, port=1, risetime_ps=DEFAULT_RISETIME_PS, t_stop_ps=None, dt_ps=None) -> Trace:
    """Impedance profile Z(t) = z_ref (1 + rho) / (1 - rho) seen from ``port``.

    Procedure: DC point by linear extrapolation of Re(S11) from the two lowest
    samples (Im forced to 0), Hermitian extension, Gaussian edge of the given
    10-90 % risetime with a raised-cosine band-edge taper, inverse FFT to the
    impulse and a cumulative sum to the step.
    """
    if net.ports not in (1, 2):
        raise ValueError(f"tdr needs a 1- or 2-port network, got {net.ports}")
    rho = tdr_rho(net, port, risetime_ps, t_stop_ps, dt_ps)
    r = np.clip(rho.values, -1 + 1e-12, 1 - 1e-12)
    return Trace(rho.axis, net.z_ref * (1 + r) / (1 - r), "TDR-impedance")


def _crossing_ps(t, step, label):
    final = step[-1]
    if abs(final) < 0.1:
        raise ValueError(f"{label}: transmitted step settles at {final:.3g}, cannot resolve 50 %")
    target = 0.5 * final
    above = np.nonzero(step >= target)[0]
    if above.size == 0 or above[0] == 0:
        raise ValueError(f"{label}: step never crosses 50 %")
    k = above[0]
    t0, t1 = t[k - 1], t[k]
    y0, y1 = step[k - 1], step[k]
    return t0 + (target - y0) * (t1 - t0) / (y1 - y0)


def skew(net4: Network, pairing=DEFAULT_PAIRING, risetime_ps=DEFAULT_RISETIME_PS, dt_ps=None) -> float:
    """P/N skew in ps from the 50 % crossings of the transmitted step responses.

    Positive when P arrives later than N. ``pairing`` is ``((P_in, N_in),
    (P_out, N_out))`` with 1-based ports.
    """
    _require_ports(net4, 4, "skew")
    (pa, na), (pc, nc) = parse_pairing(pairing)
    for label, (i, j) in (("P", (pc, pa)), ("N", (nc, na))):
        low = np.abs(net4.sij(i, j)[0])
        if low <= 0.1:
            raise ValueError(f"{label} through-path |S{i}{j}| = {low:.3g} at the lowest frequency")
    tp, sp, _ = step_response(net4, pc, pa, risetime_ps, dt_ps)
    tn, sn, _ = step_response(net4, nc, na, risetime_ps, dt_ps)
    return float(_crossing_ps(tp, sp, "P") - _crossing_ps(tn, sn, "N"))


def tdr_pn_difference(
    net4: Network, pairing=DEFAULT_PAIRING, risetime_ps=DEFAULT_RISETIME_PS, t_stop_ps=None, dt_ps=None
) -> Trace:
    """rho_P(t) - rho_N(t) at the near-end ports, both driven by positive steps."""
    _require_ports(net4, 4, "tdr_pn_difference")
    (pa, na), _ = parse_pairing(pairing)
    tp, sp, dp = step_response(net4, pa, pa, risetime_ps, dt_ps)
    _, sn, dn = step_response(net4, na, na, risetime_ps, dt_ps)
    t, diff = _window(tp, sp - sn, max(dp, dn), risetime_ps, t_stop_ps)
    return Trace(t, diff, "TDR-difference")
