"""JSON schemas for the document formats read by the CLI."""

import jsonschema

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}


class SchemaViolation(ValueError):
    """A JSON document does not match its schema; ``path`` is a JSONPath."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


def validate(doc, schema):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise SchemaViolation(err.json_path, err.message)


GRID_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "required": ["points_hz"],
            "properties": {"points_hz": {"type": "array", "items": _POS, "minItems": 1}},
        },
        {
            "type": "object",
            "required": ["fmin_hz", "fmax_hz", "step_hz"],
            "properties": {"fmin_hz": _POS, "fmax_hz": _POS, "step_hz": _POS},
        },
    ]
}


def _len_props(*names):
    props = {}
    for n in names:
        props[n + "_mm"] = _NONNEG
        props[n + "_mil"] = _NONNEG
    return props


_LINE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"const": "line"},
        **_len_props("length"),
        "z0_ohm": _POS,
        "dk_eff": {"type": "number", "minimum": 1},
        "loss_tangent": _NONNEG,
        "kc_db_per_mm_sqrt_ghz": _NONNEG,
    },
    "additionalProperties": False,
    "oneOf": [{"required": ["length_mm"]}, {"required": ["length_mil"]}],
}

_VIA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"const": "via"},
        **_len_props("barrel_length", "stub_length"),
        "barrel_z0_ohm": _POS,
        "stub_z0_ohm": _POS,
        "dk_z": {"type": "number", "minimum": 1},
        "excess_shunt_c_ff": _NONNEG,
        "pad_shunt_c_ff": _NONNEG,
        "loss_tangent": _NONNEG,
    },
    "additionalProperties": False,
    "oneOf": [{"required": ["barrel_length_mm"]}, {"required": ["barrel_length_mil"]}],
}

_SHUNT_C = {
    "type": "object",
    "required": ["kind", "value_ff"],
    "properties": {"kind": {"const": "shunt_c"}, "value_ff": _NONNEG},
    "additionalProperties": False,
}

_SERIES_L = {
    "type": "object",
    "required": ["kind", "value_ph"],
    "properties": {"kind": {"const": "series_l"}, "value_ph": _NONNEG},
    "additionalProperties": False,
}

_ELEMENT = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["line", "via", "shunt_c", "series_l"]}},
    "allOf": [
        {"if": {"properties": {"kind": {"const": k}}}, "then": s}
        for k, s in (("line", _LINE), ("via", _VIA), ("shunt_c", _SHUNT_C), ("series_l", _SERIES_L))
    ],
}

CHANNEL_SPEC_SCHEMA = {
    "type": "object",
    "required": ["elements"],
    "properties": {
        "z_ref_ohm": _POS,
        "grid": GRID_SCHEMA,
        "elements": {"type": "array", "items": _ELEMENT, "minItems": 1},
    },
    "additionalProperties": False,
}

MONTECARLO_SCHEMA = {
    "type": "object",
    "properties": {
        "n_cases": {"type": "integer", "minimum": 1},
        "total_length_mm": _POS,
        "total_length_inch": _POS,
        "n_segments": {"type": "integer", "minimum": 1},
        "z_min_ohm": _POS,
        "z_max_ohm": _POS,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "dk_eff": {"type": "number", "minimum": 1},
        "loss_tangent": _NONNEG,
        "kc_db_per_mm_sqrt_ghz": _NONNEG,
        "z_nominal_ohm": _POS,
        "width_tracks_impedance": {"type": "boolean"},
        "common_lengths": {"type": "boolean"},
        "z_ref_ohm": _POS,
        "grid": GRID_SCHEMA,
    },
    "additionalProperties": False,
}

WEAVE_SCHEMA = {
    "type": "object",
    "properties": {
        "pitch_mm": _POS,
        "dk_high": {"type": "number", "minimum": 1},
        "dk_low": {"type": "number", "minimum": 1},
        "duty": {"type": "number", "minimum": 0, "maximum": 1},
        "rotation_deg": {"type": "number", "minimum": 0, "exclusiveMaximum": 90},
        "line_length_mm": _POS,
        "line_length_inch": _POS,
        "pair_pitch_mm": _NONNEG,
        "pair_pitch_mil": _NONNEG,
    },
    "additionalProperties": False,
}

BUDGET_SCHEMA = {
    "type": "object",
    "required": ["contributors"],
    "properties": {
        "bitrate_bps": _POS,
        "budget_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "contributors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "ps"],
                "properties": {
                    "name": {"type": "string"},
                    "ps": _NONNEG,
                    "combination": {"enum": ["linear", "rss"]},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

MASK_SCHEMA = {
    "oneOf": [
        {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "prefixItems": [_POS, _NUM], "minItems": 2, "maxItems": 2},
        },
        {
            "type": "object",
            "required": ["points"],
            "properties": {
                "points": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "prefixItems": [_POS, _NUM],
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
                "scale": _POS,
                "note": {"type": "string"},
            },
        },
    ]
}

_DIELECTRIC = {
    "type": ["object", "null"],
    "required": ["thickness_mil"],
    "properties": {
        "material": {"type": "string"},
        "thickness_mil": _NONNEG,
        "dk": {"type": ["number", "null"], "minimum": 1},
        "note": {"type": "string"},
    },
}

STACKUP_SCHEMA = {
    "type": "object",
    "required": ["layers"],
    "properties": {
        "name": {"type": "string"},
        "layers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["usage"],
                "properties": {
                    "index": {"type": ["integer", "null"], "minimum": 1},
                    "usage": {"enum": ["traces", "plane", "soldermask"]},
                    "copper_weight_oz": {"type": ["number", "null"]},
                    "copper_thickness_mil": _NONNEG,
                    "dielectric_below": _DIELECTRIC,
                    "note": {"type": "string"},
                },
            },
        },
        "drills": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "start", "stop"],
                "properties": {
                    "name": {"type": "string"},
                    "start": {"type": "integer", "minimum": 1},
                    "stop": {"type": "integer", "minimum": 1},
                    "kind": {"type": "string"},
                    "diameter_mil": _POS,
                    "note": {"type": "string"},
                },
            },
        },
        "note": {"type": "string"},
    },
}
