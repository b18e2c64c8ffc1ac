"""Deterministic text output: JSON with 17-digit floats, trajectory CSV, frame JSON lines."""

from __future__ import annotations

import json
import math

import numpy as np


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = "%.17g" % x
    if s == "-0":
        s = "0"
    # keep floats recognisable as floats
    if all(c in "-0123456789" for c in s):
        s += ".0"
    return s


def dumps(obj, indent: int | None = 2, _level: int = 0) -> str:
    """JSON text with floats printed to 17 significant digits.

    Dicts are laid out one key per line when ``indent`` is set; lists are
    always written inline so matrices stay one row per list.
    """
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v, None) for v in obj) + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        if indent is None:
            return "{" + ", ".join(items) + "}"
        pad = " " * (indent * (_level + 1))
        end = " " * (indent * _level)
        return "{\n" + ",\n".join(pad + it for it in items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def trajectory_header(dim: int) -> str:
    return ",".join(["t"] + [f"u{i + 1}" for i in range(dim)] + ["v1", "v2", "v3"])


def trajectory_csv(t, u, v) -> str:
    """CSV text with header t,u1..u{4n},v1,v2,v3 and one row per sample."""
    u = np.asarray(u)
    lines = [trajectory_header(u.shape[-1])]
    for ti, ui, vi in zip(t, u, v):
        lines.append(",".join(fmt_float(x) for x in (ti, *ui, *vi)))
    return "\n".join(lines) + "\n"


def frame_record(t, O, Y, W, trace, rcc=None) -> str:
    rec = {"t": float(t), "O": O, "Y": Y, "W": W}
    if rcc is not None:
        rec["rcc"] = rcc
    rec["trace_rcc"] = float(trace)
    return dumps(rec, indent=None)


def read_floats(text: str) -> np.ndarray:
    """Parse a comma-separated list of floats."""
    try:
        return np.array([float(x) for x in text.split(",") if x.strip()], dtype=float)
    except ValueError as exc:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from exc
