#!/usr/bin/env python3
"""Blow-up versus global existence on both sides of q* = 1 + alpha/n.

Runs the bounded (alpha = 2) and growing (alpha = 1) coefficient sweeps of
``configs/`` and writes one plot-ready CSV per regime into ``--out``.
"""
import argparse
import sys
from pathlib import Path

from fujita_lab import cli

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("out/dichotomy"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    status = 0
    for name in ("sweep_bounded", "sweep_unbounded"):
        out = args.out / name
        print(f"## {name}")
        status |= cli.main(["sweep", "--config", str(ROOT / "configs" / f"{name}.cfg"),
                            "--out", str(out), "--jobs", str(args.jobs)])
    return status


if __name__ == "__main__":
    sys.exit(main())
