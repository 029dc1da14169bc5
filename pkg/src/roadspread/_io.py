"""Atomic file output, CSV formatting and plot bundles."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def csv_text(header: Sequence[str], rows, comment: str = "") -> str:
    lines = [comment.rstrip("\n")] if comment else []
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


_SCRIPTS = {
    "curves": (
        "set xlabel 'lambda'\nset ylabel 'value'\n"
        "plot '{dat}' using 1:2 with lines title 'psi1', \\\n"
        "     '{dat}' using 1:3 with lines title 'psi2'\n"
    ),
    "sweep": (
        "set logscale x\nset xlabel 'D'\nset ylabel 'c*/sqrt(D)'\n"
        "plot '{dat}' using 1:3 with linespoints title 'c*/sqrt(D)', \\\n"
        "     {c_inf} with lines title 'c_inf'\n"
    ),
    "front": (
        "set xlabel 't'\nset ylabel 'x_f'\n"
        "plot '{dat}' using 1:2 with lines title 'front'\n"
    ),
}


def emit_plot_bundle(table: Mapping[str, Sequence[float]], style: str, out_dir, stem: str,
                     **extras) -> tuple[Path, Path]:
    """Write ``<stem>.dat`` (whitespace separated) and ``<stem>.gp`` (gnuplot script).

    ``style`` is ``curves`` (two series against the first column), ``sweep``
    (ratio against ``D`` on a log axis with a horizontal ``c_inf`` line; pass
    ``c_inf=...``), ``front`` or ``generic`` (every column against the first).
    """
    cols = list(table)
    if not cols or len(table[cols[0]]) == 0:
        raise ValueError("cannot plot an empty table")
    n = len(table[cols[0]])
    if any(len(table[c]) != n for c in cols):
        raise ValueError("table columns differ in length")
    out_dir = Path(out_dir)
    dat = out_dir / f"{stem}.dat"
    gp = out_dir / f"{stem}.gp"
    lines = ["# " + " ".join(cols)]
    lines += [" ".join(fmt(float(table[c][i])) for c in cols) for i in range(n)]
    if style in _SCRIPTS:
        script = _SCRIPTS[style].format(dat=dat.name, **{k: fmt(v) for k, v in extras.items()})
    elif style == "generic":
        parts = [f"'{dat.name}' using 1:{k + 1} with lines title '{c}'" for k, c in enumerate(cols) if k > 0]
        script = f"set xlabel '{cols[0]}'\nplot " + ", \\\n     ".join(parts) + "\n"
    else:
        raise ValueError(f"unknown plot style {style!r}")
    atomic_write_text(dat, "\n".join(lines) + "\n")
    atomic_write_text(gp, script)
    return dat, gp
