"""Central values L(1/2, f x chi) from an exponentially smoothed Dirichlet series,
accepted when two smoothing scales agree."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .arith import DirichletCharacter, PrimeModulus, characters
from .coeffs import HeckeCoefficients, file_backend

SCALES = (3.0, 6.0)
# exp(-40) is far below double precision relative to the head of the series
TAIL_FACTOR = 40.0
ACCEPT_TOL = 1e-3
ANOMALY_RCONV = 10.0
CSV_HEADER = ["q", "chi_index", "re", "im", "abs", "stability_gap", "r_conv", "r_sub"]


def series_horizon(q: int, A: float) -> int:
    return int(math.ceil(TAIL_FACTOR * A * q))


def dirichlet_series_smoothed(f: HeckeCoefficients, chi: DirichletCharacter, X: float) -> complex:
    """sum_n lambda(n) chi(n) n^(-1/2) exp(-n/X), cut where exp(-n/X) < e^-40."""
    top = int(math.ceil(TAIL_FACTOR * X))
    f.require(top)
    n = np.arange(1, top + 1)
    lam = f.lam_array(top)[n]
    terms = lam * chi.values()[n % chi.q] * np.exp(-n / X) / np.sqrt(n)
    return complex(np.sum(terms))


def smoothed_pair(f: HeckeCoefficients, chi: DirichletCharacter, scales=SCALES) -> tuple[complex, complex]:
    q = chi.q
    return tuple(dirichlet_series_smoothed(f, chi, A * q) for A in scales)


@dataclass
class LValueResult:
    q: int
    chi_index: int
    value: complex
    values: tuple
    method: str
    truncation: int
    stability_gap: float
    accepted: bool

    @property
    def conductor(self) -> int:
        return self.q * self.q

    @property
    def relative_gap(self) -> float:
        return self.stability_gap / (1.0 + abs(self.value))

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "chi_index": self.chi_index,
            "value": [self.value.real, self.value.imag],
            "evaluations": [[v.real, v.imag] for v in self.values],
            "method": self.method,
            "truncation": self.truncation,
            "stability_gap": self.stability_gap,
            "conductor": self.conductor,
            "accepted": self.accepted,
        }


def lvalue_central(f: HeckeCoefficients, chi: DirichletCharacter, tol: float = ACCEPT_TOL) -> LValueResult:
    if chi.q != f.level:
        raise ValueError("character modulus must equal the level of f")
    if not chi.is_primitive:
        raise ValueError("character not primitive")
    lo, hi = smoothed_pair(f, chi)
    gap = abs(hi - lo)
    # the larger scale has the smaller smoothing bias
    return LValueResult(
        chi.q,
        chi.index,
        hi,
        (lo, hi),
        "smoothed-series",
        series_horizon(chi.q, SCALES[-1]),
        gap,
        gap < tol * (1.0 + abs(hi)),
    )


def level_results(f: HeckeCoefficients) -> list[LValueResult]:
    mod = PrimeModulus(f.level)
    return [lvalue_central(f, chi) for chi in characters(mod)]


def study_rows(f: HeckeCoefficients) -> list[dict]:
    """One row per primitive character and a summary row (chi_index='max')."""
    q = f.level
    res = level_results(f)
    rows = []
    for r in res:
        a = abs(r.value)
        rows.append({
            "q": q,
            "chi_index": r.chi_index,
            "re": r.value.real,
            "im": r.value.imag,
            "abs": a,
            "stability_gap": r.stability_gap,
            "r_conv": a / math.sqrt(q),
            "r_sub": a / q ** (0.5 - 1.0 / 12.0),
        })
    top = max(res, key=lambda r: abs(r.value))
    a = abs(top.value)
    rows.append({
        "q": q,
        "chi_index": "max",
        "re": top.value.real,
        "im": top.value.imag,
        "abs": a,
        "stability_gap": max(r.stability_gap for r in res),
        "r_conv": a / math.sqrt(q),
        "r_sub": a / q ** (0.5 - 1.0 / 12.0),
    })
    return rows


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def format_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_HEADER])
    return buf.getvalue()


def exponent_study(paths, out=None) -> dict:
    """Run the study over coefficient files; failures are isolated per file.

    Returns {rows, summaries, failures, flags}. When `out` is given, the CSV is
    written there together with a `.meta.json` sidecar.
    """
    rows, summaries, failures, flags = [], [], [], []
    for p in paths:
        try:
            f = file_backend(p)
            r = study_rows(f)
        except Exception as exc:  # reported per file
            failures.append({"path": str(p), "error": str(exc)})
            continue
        rows.extend(r)
        s = r[-1]
        summaries.append(s)
        if not math.isfinite(s["r_conv"]) or s["r_conv"] > ANOMALY_RCONV:
            flags.append({"q": s["q"], "r_conv": s["r_conv"], "reason": "r_conv above 10"})
        for x in r[:-1]:
            if x["stability_gap"] >= ACCEPT_TOL * (1 + x["abs"]):
                flags.append({"q": x["q"], "chi_index": x["chi_index"], "reason": "unstable"})
    result = {"rows": rows, "summaries": summaries, "failures": failures, "flags": flags}
    if out is not None:
        out = Path(out)
        out.write_text(format_csv(rows), encoding="utf-8")
        meta = {
            "version": __version__,
            "config": {"levels": [str(p) for p in paths], "scales": list(SCALES), "tail_factor": TAIL_FACTOR},
            "seed": 0,
            "failures": failures,
            "flags": flags,
        }
        Path(str(out) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return result
