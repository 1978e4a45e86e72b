"""File formats: JSON artifacts and CSV time series.

All floats are written with 17 significant digits so every file is
byte-reproducible and round-trips doubles exactly.  Spectral coefficients are
listed as [l, m, value] with l ascending and m ascending within each degree.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .cross_section import CrossSection, GeometryReport
from .errors import ParseError
from .sphere_spectral import SpectralField, coeff_index

CSV_COLUMNS = [
    "t",
    "area",
    "area_radius",
    "Q",
    "min_H2",
    "max_K",
    "norm_A_tracefree",
    "gradient_monitor",
]


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "null"
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.17g}"


def render_json(obj, indent: int = 0) -> str:
    """JSON text with deterministic float formatting (insertion key order)."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}{json.dumps(str(k))}: {render_json(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq)
        if flat:
            return "[" + ", ".join(render_json(v) for v in seq) + "]"
        items = [f"{inner}{render_json(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if obj is None:
        return "null"
    return json.dumps(obj)


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_json(obj) + "\n")


def load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, col {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}")


def coeff_list(c: SpectralField):
    out = []
    for l in range(c.bandlimit + 1):
        for m in range(-l, l + 1):
            out.append([l, m, float(c.coeffs[coeff_index(l, m)])])
    return out


def spectral_to_obj(c: SpectralField) -> dict:
    return {"bandlimit": c.bandlimit, "coeffs": coeff_list(c)}


def _coeffs_from_list(bandlimit, entries, path):
    c = SpectralField.zeros(bandlimit)
    for entry in entries:
        try:
            l, m, value = entry
        except (TypeError, ValueError):
            raise ParseError(f"{path}: malformed coefficient entry {entry!r}")
        if not (0 <= l <= bandlimit and -l <= m <= l):
            raise ParseError(f"{path}: coefficient ({l},{m}) outside bandlimit")
        c.coeffs[coeff_index(int(l), int(m))] = float(value)
    return c


def spectral_from_obj(obj, path="<memory>") -> SpectralField:
    try:
        bandlimit = int(obj["bandlimit"])
        entries = obj["coeffs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a spectral-field object ({exc})")
    return _coeffs_from_list(bandlimit, entries, path)


def section_to_obj(section: CrossSection, meta: dict | None = None) -> dict:
    return {
        "bandlimit": section.bandlimit,
        "omega_coeffs": coeff_list(section.omega),
        "meta": meta or {},
    }


def section_from_obj(obj, path="<memory>") -> CrossSection:
    try:
        bandlimit = int(obj["bandlimit"])
        entries = obj["omega_coeffs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a cross-section object ({exc})")
    return CrossSection(_coeffs_from_list(bandlimit, entries, path))


def save_section(path, section: CrossSection, meta: dict | None = None):
    write_json(path, section_to_obj(section, meta))


def load_section(path) -> CrossSection:
    return section_from_obj(load_json(path), path)


def report_to_obj(report: GeometryReport) -> dict:
    return {
        "area": report.area,
        "area_radius": report.area_radius,
        "min_h2": report.min_h2,
        "max_h2": report.max_h2,
        "int_h2": report.int_h2,
        "norm_a_tracefree": report.norm_a_tracefree,
        "gap_lhs": report.gap_lhs,
        "gap_rhs": report.gap_rhs,
        "z_vector": [float(z) for z in report.z_vector],
        "kappa": report.kappa,
        "codazzi_residual": report.codazzi_residual,
        "w22_to_reference": report.w22_to_reference,
    }


def lorentz_to_obj(matrix) -> list:
    return [float(x) for x in np.asarray(matrix, dtype=float).reshape(16)]


def fourvector_to_obj(components) -> list:
    return [float(x) for x in np.asarray(components, dtype=float).reshape(4)]


def write_flow_csv(path, states):
    """One header row, one row per state (the initial state included)."""
    lines = [",".join(CSV_COLUMNS)]
    for st in states:
        d = st.diagnostics
        row = [st.t] + [d[k] for k in CSV_COLUMNS[1:]]
        lines.append(",".join(f"{x:.17g}" for x in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
