"""N-port network data: Touchstone v1 I/O, resampling and mixed-mode conversion."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .units import FREQ_UNITS

__all__ = [
    "TouchstoneError",
    "Network",
    "MixedModeNetwork",
    "check_grid",
    "linear_grid",
    "default_grid",
    "parse_touchstone",
    "read_touchstone",
    "write_touchstone",
    "resample",
    "to_mixed_mode",
    "from_mixed_mode",
    "parse_pairing",
    "DEFAULT_PAIRING",
]

# P travels 1->2 and N travels 3->4 unless the caller says otherwise.
DEFAULT_PAIRING = ((1, 3), (2, 4))

_FORMATS = ("RI", "MA", "DB")
_PARAM_KINDS = ("S", "Y", "Z", "H", "G")
_DB_FLOOR = -400.0


class TouchstoneError(ValueError):
    """Raised for malformed or unsupported Touchstone content."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def check_grid(points) -> np.ndarray:
    """Validate a frequency grid (Hz) and return it as a float array.

    The grid must be one-dimensional, finite, strictly positive and strictly
    ascending.
    """
    f = np.asarray(points, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("frequency grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(f)):
        raise ValueError("frequency grid contains non-finite values")
    if f[0] <= 0:
        raise ValueError("frequency grid values must be > 0")
    if f.size > 1 and np.any(np.diff(f) <= 0):
        raise ValueError("frequency grid must be strictly ascending")
    return f


def linear_grid(fmin, fmax, step) -> np.ndarray:
    """Evenly spaced grid ``fmin, fmin+step, ...`` up to and including ``fmax``."""
    if step <= 0 or fmax < fmin:
        raise ValueError("invalid grid bounds")
    n = int(math.floor((fmax - fmin) / step + 1e-9)) + 1
    return check_grid(fmin + step * np.arange(n))


def default_grid() -> np.ndarray:
    """10 MHz to 40 GHz in 10 MHz steps, the probe-limited measurement band."""
    return linear_grid(10e6, 40e9, 10e6)


@dataclass
class Network:
    """Tabulated S-parameters.

    Parameters
    ----------
    f : array of shape (F,)
        Frequency grid in Hz.
    s : complex array of shape (F, n, n)
        Linear S-parameter matrices, ``s[k, i, j]`` is S_(i+1)(j+1).
    z_ref : float
        Reference impedance in ohm.
    """

    f: np.ndarray
    s: np.ndarray
    z_ref: float = 50.0

    def __post_init__(self):
        self.f = check_grid(self.f)
        s = np.asarray(self.s, dtype=complex)
        if s.ndim == 1:
            s = s[:, None, None]
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise ValueError("S data must have shape (F, n, n)")
        if s.shape[0] != self.f.size:
            raise ValueError(
                f"S data has {s.shape[0]} points but grid has {self.f.size}"
            )
        if self.z_ref <= 0:
            raise ValueError("z_ref must be > 0")
        self.s = s
        self.z_ref = float(self.z_ref)

    @property
    def ports(self) -> int:
        return self.s.shape[1]

    def sij(self, i, j) -> np.ndarray:
        """S-parameter trace with 1-based port indices."""
        return self.s[:, i - 1, j - 1]

    def max_singular_value(self) -> np.ndarray:
        return np.linalg.svd(self.s, compute_uv=False)[:, 0]

    def is_passive(self, tol=1e-6) -> bool:
        """True when every matrix has largest singular value <= 1 + tol.

        Measured data is only reported on, never corrected.
        """
        return bool(np.all(self.max_singular_value() <= 1.0 + tol))


@dataclass
class MixedModeNetwork:
    """Differential/common-mode blocks of a 4-port, each of shape (F, 2, 2)."""

    f: np.ndarray
    sdd: np.ndarray
    sdc: np.ndarray
    scd: np.ndarray
    scc: np.ndarray
    pairing: tuple = DEFAULT_PAIRING
    z_ref: float = 50.0

    def __post_init__(self):
        self.f = check_grid(self.f)
        for name in ("sdd", "sdc", "scd", "scc"):
            block = np.asarray(getattr(self, name), dtype=complex)
            if block.shape != (self.f.size, 2, 2):
                raise ValueError(f"{name} must have shape ({self.f.size}, 2, 2)")
            setattr(self, name, block)

    def differential(self) -> Network:
        """The SDD block as a 2-port referenced to the differential impedance."""
        return Network(self.f, self.sdd.copy(), z_ref=2.0 * self.z_ref)


# -- Touchstone ---------------------------------------------------------------


def _parse_option_line(tokens, lineno):
    unit, kind, fmt, z_ref = "GHZ", "S", "MA", 50.0
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok in FREQ_UNITS:
            unit = tok
        elif tok in _PARAM_KINDS:
            kind = tok
        elif tok in _FORMATS:
            fmt = tok
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise TouchstoneError("option line: 'R' without impedance", lineno)
            try:
                z_ref = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneError(
                    f"option line: bad reference impedance {tokens[i + 1]!r}", lineno
                ) from None
            if not z_ref > 0:
                raise TouchstoneError("option line: reference impedance must be > 0", lineno)
            i += 1
        else:
            raise TouchstoneError(f"option line: unrecognised token {tokens[i]!r}", lineno)
        i += 1
    if kind != "S":
        raise TouchstoneError(f"parameter kind {kind} is not supported (only S)", lineno)
    return unit, fmt, z_ref


def _pairs_to_complex(a, b, fmt):
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def parse_touchstone(text, declared_ports) -> Network:
    """Parse Touchstone v1 text into a :class:`Network`.

    Parameters
    ----------
    text : str or iterable of str
        File contents.
    declared_ports : int
        Port count, normally taken from the ``.sNp`` extension.

    Raises
    ------
    TouchstoneError
        On malformed option lines, version 2 keywords, unsupported parameter
        kinds, wrong value counts or non-ascending frequencies. Messages carry
        the offending line number.
    """
    n = int(declared_ports)
    if n < 1:
        raise ValueError("declared_ports must be >= 1")
    lines = text.splitlines() if isinstance(text, str) else list(text)
    per_record = 1 + 2 * n * n

    unit, fmt, z_ref = "GHZ", "MA", 50.0
    seen_option = False
    records = []  # (lineno, values)
    current = None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            raise TouchstoneError("Touchstone version 2 keywords are not supported", lineno)
        if line.startswith("#"):
            if not seen_option:
                unit, fmt, z_ref = _parse_option_line(line[1:].split(), lineno)
                seen_option = True
            continue
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError:
            raise TouchstoneError(f"non-numeric data: {line!r}", lineno) from None
        if len(values) % 2 == 1:
            if current is not None:
                records.append(current)
            current = (lineno, values)
        else:
            if current is None:
                raise TouchstoneError("continuation line before any frequency", lineno)
            current[1].extend(values)
    if current is not None:
        records.append(current)
    if not records:
        raise TouchstoneError("no network data found")

    data = np.empty((len(records), per_record))
    for k, (lineno, values) in enumerate(records):
        if len(values) != per_record:
            raise TouchstoneError(
                f"expected {per_record} values for a {n}-port record, got {len(values)}",
                lineno,
            )
        data[k] = values

    f = data[:, 0] * FREQ_UNITS[unit]
    bad = np.nonzero(np.diff(f) <= 0)[0]
    if bad.size:
        raise TouchstoneError("frequencies are not strictly ascending", records[bad[0] + 1][0])
    if f[0] <= 0:
        raise TouchstoneError("frequencies must be > 0", records[0][0])

    vals = _pairs_to_complex(data[:, 1::2], data[:, 2::2], fmt).reshape(-1, n, n)
    if n == 2:
        # v1 two-port column order is S11 S21 S12 S22
        vals = vals.transpose(0, 2, 1)
    return Network(f, vals, z_ref=z_ref)


def read_touchstone(path) -> Network:
    """Read a ``.sNp`` file, taking the port count from the extension."""
    path = Path(path)
    m = re.fullmatch(r"\.s(\d+)p", path.suffix.lower())
    if not m:
        raise TouchstoneError(f"cannot infer port count from extension {path.suffix!r}")
    try:
        return parse_touchstone(path.read_text(), int(m.group(1)))
    except TouchstoneError as exc:
        raise TouchstoneError(f"{path}: {exc}") from None


def _format_pair(z, fmt):
    if fmt == "RI":
        a, b = z.real, z.imag
    else:
        mag = abs(z)
        b = math.degrees(math.atan2(z.imag, z.real))
        if fmt == "MA":
            a = mag
        else:
            a = 20.0 * math.log10(mag) if mag > 0 else _DB_FLOOR
            a = max(a, _DB_FLOOR)
    return f"{a:.15g} {b:.15g}"


def write_touchstone(net: Network, format="RI") -> str:
    """Render a network as Touchstone v1 text.

    Frequencies are written in Hz. Matrices with three or more ports wrap at
    four value pairs per line and start every matrix row on a new line. In DB
    format an exactly-zero magnitude is written as -400 dB.
    """
    fmt = format.upper()
    if fmt not in _FORMATS:
        raise ValueError(f"unknown format {format!r}")
    n = net.ports
    out = [
        f"! {n}-port S-parameters",
        f"# HZ S {fmt} R {net.z_ref:.15g}",
    ]
    for k, freq in enumerate(net.f):
        m = net.s[k]
        fstr = f"{freq:.15g}"
        if n <= 2:
            order = m.T.ravel() if n == 2 else m.ravel()
            out.append(fstr + " " + " ".join(_format_pair(z, fmt) for z in order))
            continue
        for i in range(n):
            row = [_format_pair(z, fmt) for z in m[i]]
            for c in range(0, n, 4):
                prefix = fstr if (i == 0 and c == 0) else " " * len(fstr)
                out.append(prefix + " " + " ".join(row[c : c + 4]))
    return "\n".join(out) + "\n"


# -- resampling ---------------------------------------------------------------


def resample(net: Network, grid) -> Network:
    """Linearly interpolate real and imaginary parts onto ``grid``.

    Extrapolation is refused.
    """
    target = check_grid(grid)
    lo, hi = net.f[0], net.f[-1]
    slack = 1e-12 * hi
    if target[0] < lo - slack or target[-1] > hi + slack:
        raise ValueError(
            f"target grid [{target[0]:g}, {target[-1]:g}] Hz extends beyond "
            f"source grid [{lo:g}, {hi:g}] Hz"
        )
    n = net.ports
    flat = net.s.reshape(net.f.size, n * n)
    out = np.empty((target.size, n * n), dtype=complex)
    for col in range(n * n):
        out[:, col] = np.interp(target, net.f, flat[:, col].real) + 1j * np.interp(
            target, net.f, flat[:, col].imag
        )
    return Network(target, out.reshape(-1, n, n), z_ref=net.z_ref)


# -- mixed mode -----------------------------------------------------------------


def parse_pairing(pairing):
    """Normalise a pairing given as ``((a, b), (c, d))`` or ``"a,b:c,d"``.

    The first pair is (P, N) of differential port 1, the second of port 2.
    """
    if isinstance(pairing, str):
        try:
            pairing = tuple(
                tuple(int(p) for p in half.split(",")) for half in pairing.split(":")
            )
        except ValueError:
            raise ValueError(f"bad pairing string {pairing!r}") from None
    try:
        (a, b), (c, d) = pairing
    except (TypeError, ValueError):
        raise ValueError(f"pairing must be ((a, b), (c, d)), got {pairing!r}") from None
    ports = (int(a), int(b), int(c), int(d))
    if sorted(ports) != [1, 2, 3, 4]:
        raise ValueError(f"pairing {pairing!r} is not a permutation of ports 1..4")
    return (ports[0], ports[1]), (ports[2], ports[3])


def _mm_matrix(pairing):
    (a, b), (c, d) = pairing
    m = np.zeros((4, 4))
    r = 1.0 / math.sqrt(2.0)
    m[0, a - 1], m[0, b - 1] = r, -r
    m[1, c - 1], m[1, d - 1] = r, -r
    m[2, a - 1], m[2, b - 1] = r, r
    m[3, c - 1], m[3, d - 1] = r, r
    return m


def to_mixed_mode(net: Network, pairing=DEFAULT_PAIRING) -> MixedModeNetwork:
    """Convert a single-ended 4-port into mixed-mode blocks.

    With pairing ``((1, 3), (2, 4))``, SDD11 = (S11 - S13 - S31 + S33) / 2.
    """
    if net.ports != 4:
        raise ValueError(f"mixed-mode conversion needs a 4-port, got {net.ports}")
    pairing = parse_pairing(pairing)
    m = _mm_matrix(pairing)
    smm = m @ net.s @ m.T
    return MixedModeNetwork(
        net.f.copy(),
        sdd=smm[:, :2, :2],
        sdc=smm[:, :2, 2:],
        scd=smm[:, 2:, :2],
        scc=smm[:, 2:, 2:],
        pairing=pairing,
        z_ref=net.z_ref,
    )


def from_mixed_mode(mm: MixedModeNetwork) -> Network:
    """Inverse of :func:`to_mixed_mode`."""
    m = _mm_matrix(mm.pairing)
    smm = np.block([[mm.sdd, mm.sdc], [mm.scd, mm.scc]])
    return Network(mm.f.copy(), m.T @ smm @ m, z_ref=mm.z_ref)
