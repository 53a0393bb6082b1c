"""JSON encoding of programs.

Two shapes are produced:

* ``ahs-program/1`` -- the canonical, round-trippable document (um, s, rad/s).
* a Braket-AHS-shaped export (metres, seconds, rad/s) for handing a program to
  external tooling. It is write-only; see ``docs/formats.md``.
"""
from __future__ import annotations

import json
import math
from typing import Any

from .errors import ParseError
from .program import AhsProgram, DrivingField, Position, Register, ShiftingField, Waveform

SCHEMA = "ahs-program/1"
UM = 1e-6


def _wave_doc(w: Waveform) -> dict:
    return {"times_s": list(w.times), "values": list(w.values)}


def program_to_dict(program: AhsProgram) -> dict:
    shift = None
    if program.shift is not None:
        shift = {
            "delta_local": _wave_doc(program.shift.delta_local),
            "pattern": list(program.shift.pattern),
        }
    return {
        "schema": SCHEMA,
        "register": {"sites": [[s.x, s.y] for s in program.register.sites]},
        "drive": {
            "omega": _wave_doc(program.drive.omega),
            "phi": _wave_doc(program.drive.phi),
            "delta_global": _wave_doc(program.drive.delta_global),
        },
        "shift": shift,
        "duration_s": program.duration,
    }


def serialize_program(program: AhsProgram, indent: int | None = 2) -> str:
    return json.dumps(program_to_dict(program), indent=indent)


def _require(doc: Any, key: str, loc: str, kind=dict):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", loc)
    if key not in doc:
        raise ParseError(f"missing key {key!r}", loc)
    value = doc[key]
    if kind is not None and not isinstance(value, kind):
        raise ParseError(f"expected {getattr(kind, '__name__', kind)}", f"{loc}.{key}")
    return value


def _number(v: Any, loc: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ParseError("expected a finite number", loc)
    return float(v)


def _wave(doc: Any, loc: str) -> Waveform:
    times = _require(doc, "times_s", loc, list)
    values = _require(doc, "values", loc, list)
    ts = [_number(t, f"{loc}.times_s[{i}]") for i, t in enumerate(times)]
    vs = [_number(v, f"{loc}.values[{i}]") for i, v in enumerate(values)]
    try:
        return Waveform(ts, vs)
    except ValueError as exc:
        raise ParseError(str(exc), loc) from exc


def program_from_dict(doc: Any, loc: str = "$") -> AhsProgram:
    if not isinstance(doc, dict):
        raise ParseError("expected an object", loc)
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise ParseError(f"unsupported schema {schema!r}", f"{loc}.schema")

    reg_doc = _require(doc, "register", loc)
    raw_sites = _require(reg_doc, "sites", f"{loc}.register", list)
    sites = []
    for i, s in enumerate(raw_sites):
        sloc = f"{loc}.register.sites[{i}]"
        if not isinstance(s, list) or len(s) != 2:
            raise ParseError("expected [x_um, y_um]", sloc)
        sites.append(Position(_number(s[0], f"{sloc}[0]"), _number(s[1], f"{sloc}[1]")))
    if not sites:
        raise ParseError("register has no sites", f"{loc}.register.sites")

    drive_doc = _require(doc, "drive", loc)
    waves = {
        name: _wave(_require(drive_doc, name, f"{loc}.drive"), f"{loc}.drive.{name}")
        for name in ("omega", "phi", "delta_global")
    }
    try:
        drive = DrivingField(**waves)
    except ValueError as exc:
        raise ParseError(str(exc), f"{loc}.drive") from exc

    shift = None
    shift_doc = doc.get("shift")
    if shift_doc is not None:
        sloc = f"{loc}.shift"
        delta = _wave(_require(shift_doc, "delta_local", sloc), f"{sloc}.delta_local")
        pattern = [
            _number(h, f"{sloc}.pattern[{i}]")
            for i, h in enumerate(_require(shift_doc, "pattern", sloc, list))
        ]
        try:
            shift = ShiftingField(delta, tuple(pattern))
        except ValueError as exc:
            raise ParseError(str(exc), sloc) from exc

    duration = _number(_require(doc, "duration_s", loc, None), f"{loc}.duration_s")
    try:
        return AhsProgram(Register(tuple(sites)), drive, shift, duration)
    except ValueError as exc:
        raise ParseError(str(exc), loc) from exc


def parse_program(text: str) -> AhsProgram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return program_from_dict(doc)


def _braket_series(w: Waveform) -> dict:
    return {"time": {"values": list(w.times)}, "value": {"values": list(w.values)}}


def export_braket_compatible(program: AhsProgram) -> dict:
    """Braket-AHS-shaped document: positions in metres, fields in rad/s."""
    drive = program.drive
    doc = {
        "braketSchemaHeader": {"name": "braket.ir.ahs.program", "version": "1"},
        "setup": {
            "ahs_register": {
                "sites": [[s.x * UM, s.y * UM] for s in program.register.sites],
                "filling": [1] * len(program.register),
            }
        },
        "hamiltonian": {
            "drivingFields": [
                {
                    "amplitude": {"time_series": _braket_series(drive.omega), "pattern": "uniform"},
                    "phase": {"time_series": _braket_series(drive.phi), "pattern": "uniform"},
                    "detuning": {"time_series": _braket_series(drive.delta_global), "pattern": "uniform"},
                }
            ],
            "localDetuning": [],
        },
    }
    if program.shift is not None:
        doc["hamiltonian"]["localDetuning"].append(
            {
                "magnitude": {
                    "time_series": _braket_series(program.shift.delta_local),
                    "pattern": list(program.shift.pattern),
                }
            }
        )
    return doc
