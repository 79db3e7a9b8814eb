"""Result serialization: raw CSV rows and a summary JSON, byte-deterministic.

Identical config + seeds produce byte-identical files: rows are sorted by
(j, seed, phi), floats are written with 17 significant digits (lossless for
binary64), newlines are LF, and summaries contain no clocks or machine state.
"""

from __future__ import annotations

import json
from pathlib import Path

from .experiments import RunResult

CSV_HEADER = "experiment,j,seed,phi_id,re_pairing,im_pairing,re_A,im_A,residual,iters"

VERSION = "0.1.0"


def fmt_float(x: float) -> str:
    return f"{float(x):.17g}"


def rows_csv(result: RunResult) -> str:
    lines = [CSV_HEADER]
    for r in result.sorted_rows():
        p = complex(r.pairing)
        a = complex(r.a_eff)
        lines.append(",".join([
            result.experiment,
            str(int(r.j)),
            str(int(r.seed)),
            r.phi_id,
            fmt_float(p.real), fmt_float(p.imag),
            fmt_float(a.real), fmt_float(a.imag),
            fmt_float(r.residual),
            str(int(r.iters)),
        ]))
    return "\n".join(lines) + "\n"


def summary_json(result: RunResult, config_digest: str, seeds) -> str:
    doc = {
        "experiment": result.experiment,
        "version": VERSION,
        "config_sha256": config_digest,
        "seeds": list(seeds),
        "summary": result.summary,
        "failures": result.failures,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_results(result: RunResult, outdir, config_digest: str, seeds) -> dict:
    """Write rows.csv and summary.json under outdir; returns the paths."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "rows.csv"
    json_path = out / "summary.json"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(rows_csv(result))
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_json(result, config_digest, seeds))
    return {"csv": str(csv_path), "summary": str(json_path)}
