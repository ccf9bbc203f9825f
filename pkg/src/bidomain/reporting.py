"""Deterministic output formats: CSV writers, check logs, run reports.

All floating-point output is printed with 17 significant digits so values
round-trip exactly and repeated runs with the same config and seed produce
byte-identical files.  CSVs are UTF-8, comma-separated, LF-terminated, with a
single header row and no timestamps.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

__all__ = ["fmt_float", "write_csv", "read_csv", "CheckLog", "PhaseTimer",
           "write_report", "ensure_dir"]


def fmt_float(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt_float(v) for v in row) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


@dataclass
class CheckLog:
    """Pass/fail ledger; every executed check appears exactly once."""

    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str = "") -> bool:
        if any(name == existing for existing, _, _ in self.checks):
            raise ValueError(f"duplicate check name {name!r}")
        self.checks.append((name, bool(passed), detail))
        return passed

    @property
    def all_passed(self) -> bool:
        return all(passed for _, passed, _ in self.checks)

    def lines(self) -> list[str]:
        return [
            f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
            for name, passed, detail in self.checks
        ]


class PhaseTimer:
    def __init__(self):
        self.phases: list[tuple[str, float]] = []
        self._t0 = None
        self._name = None

    def start(self, name: str):
        self.stop()
        self._name = name
        self._t0 = time.perf_counter()

    def stop(self):
        if self._name is not None:
            self.phases.append((self._name, time.perf_counter() - self._t0))
            self._name = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def write_report(path, subcommand: str, config_echo: str, checks: CheckLog,
                 timer: PhaseTimer, seed: int, extra: dict | None = None) -> None:
    """Human-readable run report with a reparseable config echo block."""
    import scipy

    from bidomain import __version__, kernels

    lines = [
        f"subcommand: {subcommand}",
        f"bidomain version: {__version__}",
        f"python: {sys.version.split()[0]}, numpy: {np.__version__}, scipy: {scipy.__version__}",
        f"kernel backend: {kernels.BACKEND}",
        f"rng: PCG64 seed {seed}",
        "",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {value}")
    if extra:
        lines.append("")
    lines.append("[timings]")
    for name, dt in timer.phases:
        lines.append(f"{name}: {dt:.3f} s")
    lines.append("")
    lines.append("[checks]")
    lines.extend(checks.lines() or ["(none)"])
    lines.append("")
    lines.append("[config-echo]")
    lines.append(config_echo)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
