"""Physical constants and unit conversions shared across the package.

Internal units are mm, ps, GHz/Hz, ohm, fF and pH. Mil is accepted at the
interfaces with the exact factor 1 mil = 0.0254 mm.
"""

import math

C_MM_PER_PS = 0.299792458
C_MM_PER_S = 299792458e3
MM_PER_MIL = 0.0254
MM_PER_INCH = 25.4
NEPER_DB = 20.0 * math.log10(math.e)

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}


def mil_to_mm(value):
    return value * MM_PER_MIL


def mm_to_mil(value):
    return value / MM_PER_MIL


def inch_to_mm(value):
    return value * MM_PER_INCH


def db_to_neper(value):
    return value / NEPER_DB
