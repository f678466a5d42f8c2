"""Canonical JSON emission: sorted keys, fixed 17-significant-digit floats.

Reports must be byte-identical across runs, so floats are printed with
an explicit format instead of relying on repr shortest-roundtrip.
"""

from __future__ import annotations

import json


def _format(value) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        out = format(value, ".17g")
        # keep valid JSON for the non-finite sentinels
        if out in ("inf", "-inf", "nan"):
            raise ValueError(f"non-finite float {out} in report")
        return out
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = sorted(value.items())
        inner = ",".join(f"{json.dumps(str(k))}:{_format(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_format(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def dumps(value) -> str:
    return _format(value) + "\n"
