"""Regenerate the bundled coefficient files for levels 11, 17 and 19."""

from __future__ import annotations

import argparse
from pathlib import Path

from delta_lab.coeffs import CURVES, bundled_level_file, point_count_backend, validate, write_coefficients


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=10000)
    ap.add_argument("--out-dir", type=Path, default=bundled_level_file(11).parent)
    args = ap.parse_args(argv)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for level, ainv in sorted(CURVES.items()):
        c = point_count_backend(ainv, level, args.nmax, f"{level}.2.a.a")
        validate(c)
        path = args.out_dir / f"{level}.txt"
        write_coefficients(c, path)
        print(f"wrote {path} (NMAX={c.nmax})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
