"""Deterministic output formatting: 15-significant-digit numbers, provenance
comment headers, and atomic CSV/JSON writers.

Every floating value is rendered with %.15g so identical queries produce
byte-identical artifacts across runs and worker counts. CSV files open with
'# key = value' provenance lines (version, parameters, cutoffs, tolerances);
JSON artifacts carry the same map under a "provenance" key, since comment
lines are not representable in JSON."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, TextIO

from . import __version__


def fmt(value: object) -> str:
    """Render one CSV cell: floats at 15 significant digits, booleans as
    true/false, everything else through str."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.15g" % value
    if isinstance(value, complex):
        return "%.15g%+.15gj" % (value.real, value.imag)
    return str(value)


def round15(obj: object) -> object:
    """Recursively round floats through %.15g so JSON text never exceeds 15
    significant digits (the rounded float's shortest repr preserves them)."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return float("%.15g" % obj)
    if isinstance(obj, complex):
        return {"re": float("%.15g" % obj.real), "im": float("%.15g" % obj.imag)}
    if isinstance(obj, Mapping):
        return {str(k): round15(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round15(v) for v in obj]
    return obj


def provenance(subcommand: str, params: Mapping[str, object]) -> dict[str, str]:
    """Version and parameter map recorded in every artifact. Deliberately
    excludes timestamps and host details: outputs must be byte-identical
    across runs."""
    out = {"tool": "modtraces", "version": __version__, "subcommand": subcommand}
    for key in sorted(params):
        value = params[key]
        if value is None:
            continue
        out[key] = fmt(value)
    return out


def comment_lines(prov: Mapping[str, str]) -> list[str]:
    return [f"# {key} = {value}" for key, value in prov.items()]


def csv_lines(
    headers: Sequence[str],
    rows: Iterable[Sequence[object]],
    prov: Mapping[str, str] | None = None,
) -> Iterator[str]:
    """Comment header, column header, then one line per row."""
    if prov:
        yield from comment_lines(prov)
    yield ",".join(headers)
    for row in rows:
        yield ",".join(fmt(cell) for cell in row)


def json_text(payload: object, prov: Mapping[str, str] | None = None) -> str:
    body: object
    if prov is not None:
        body = {"provenance": dict(prov), "data": round15(payload)}
    else:
        body = round15(payload)
    return json.dumps(body, indent=2) + "\n"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a sibling temporary file and os.replace, so readers never
    observe a partially written artifact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def stream_lines(lines: Iterable[str], out: TextIO) -> None:
    """Incremental line writer: an interrupted run leaves a valid prefix."""
    for line in lines:
        out.write(line + "\n")
        out.flush()
