from __future__ import annotations

import pytest

from delta_lab.coeffs import CURVES, bundled_level_file, eta_product_backend, file_backend, point_count_backend


@pytest.fixture(scope="session")
def f11():
    return eta_product_backend(10**6)


@pytest.fixture(scope="session")
def level_files():
    return {q: bundled_level_file(q) for q in (11, 17, 19)}


@pytest.fixture(scope="session")
def forms(level_files):
    return {q: file_backend(p) for q, p in level_files.items()}


@pytest.fixture(scope="session")
def f17_long():
    return point_count_backend(CURVES[17], 17, 40000, "17.2.a.a")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
