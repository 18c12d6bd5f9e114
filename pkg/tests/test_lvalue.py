from __future__ import annotations

import csv
import io
import json
import math

import pytest

from delta_lab.arith import DirichletCharacter, PrimeModulus, characters
from delta_lab.lvalue import (
    CSV_HEADER,
    exponent_study,
    format_csv,
    level_results,
    lvalue_central,
    study_rows,
)


def loop_series(f, chi, X):
    """Pure-Python smoothed sum with a horizon of 60 X."""
    lam = f.lam_array(f.nmax)
    vals = chi.values()
    top = min(int(60 * X), f.nmax)
    return sum(complex(lam[n] * vals[n % chi.q]) * math.exp(-n / X) / math.sqrt(n) for n in range(1, top + 1))


@pytest.fixture(scope="module")
def results11(forms):
    return level_results(forms[11])


class TestCentralValues:
    def test_all_primitive_accepted(self, results11):
        assert len(results11) == 9
        for r in results11:
            assert r.accepted
            assert r.stability_gap < 1e-3 * (1 + abs(r.value))
            assert r.conductor == 121

    def test_against_larger_scale_loop(self, forms):
        f = forms[11]
        chi = DirichletCharacter(PrimeModulus(11), 2)
        ref = loop_series(f, chi, 12 * 11)
        assert abs(lvalue_central(f, chi).value - ref) < 1e-8

    def test_conjugation(self, results11):
        by_index = {r.chi_index: r for r in results11}
        for a in range(1, 10):
            b = 10 - a
            va, vb = by_index[a].value, by_index[b].value
            assert abs(va - vb.conjugate()) < 1e-6 * max(abs(va), 1e-300) + 1e-15

    def test_real_character_is_real(self, results11):
        quad = [r for r in results11 if r.chi_index == 5][0]
        assert abs(quad.value.imag) < 1e-12

    def test_rejects_trivial_and_wrong_level(self, forms):
        with pytest.raises(ValueError, match="primitive"):
            lvalue_central(forms[11], DirichletCharacter(PrimeModulus(11), 0))
        with pytest.raises(ValueError, match="level"):
            lvalue_central(forms[11], DirichletCharacter(PrimeModulus(17), 1))

    def test_json(self, results11):
        doc = results11[0].to_json()
        json.dumps(doc)
        assert doc["method"] == "smoothed-series"


class TestStudy:
    def test_rows_level11(self, forms):
        rows = study_rows(forms[11])
        assert len(rows) == 10
        assert rows[-1]["chi_index"] == "max"
        top = max(r["abs"] for r in rows[:-1])
        assert rows[-1]["abs"] == top
        assert rows[-1]["r_conv"] == pytest.approx(top / math.sqrt(11))

    def test_csv_roundtrip(self, forms):
        text = format_csv(study_rows(forms[11]))
        parsed = list(csv.reader(io.StringIO(text)))
        assert parsed[0] == CSV_HEADER
        assert len(parsed) == 11
        assert float(parsed[1][4]) == pytest.approx(math.hypot(float(parsed[1][2]), float(parsed[1][3])))

    def test_three_levels(self, level_files, tmp_path):
        out = tmp_path / "study.csv"
        rep = exponent_study([level_files[q] for q in (11, 17, 19)], out)
        assert [s["q"] for s in rep["summaries"]] == [11, 17, 19]
        assert not rep["failures"]
        assert all(math.isfinite(s["r_conv"]) for s in rep["summaries"])
        assert not [f for f in rep["flags"] if f.get("reason") == "r_conv above 10"]
        assert out.exists()
        meta = json.loads((tmp_path / "study.csv.meta.json").read_text())
        assert meta["flags"] == rep["flags"]

    def test_empty(self):
        rep = exponent_study([])
        assert rep == {"rows": [], "summaries": [], "failures": [], "flags": []}

    def test_missing_file_isolated(self, level_files, tmp_path):
        rep = exponent_study([tmp_path / "nope.txt", level_files[11]])
        assert len(rep["failures"]) == 1 and "nope.txt" in rep["failures"][0]["path"]
        assert [s["q"] for s in rep["summaries"]] == [11]

    def test_deterministic_csv(self, level_files, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        exponent_study([level_files[11]], a)
        exponent_study([level_files[11]], b)
        assert a.read_bytes() == b.read_bytes()
