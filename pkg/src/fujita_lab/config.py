"""Flat ``key=value`` run configs with dotted namespaces.

Example::

    # Fujita sweep, bounded coefficients
    field.kind = power
    field.alpha = 2
    sweep.q = 1.5, 2.5, 3.5, 4.5
    sweep.amplitudes = 0.05, 0.5
    grid.rmax = 200
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .coefficients import CoefficientField
from .errors import ConfigurationError

FIELD_KEYS = {"field.kind", "field.alpha", "field.n", "field.c", "field.value", "field.table"}

SWEEP_KEYS = FIELD_KEYS | {
    "q", "sweep.q", "sweep.amplitudes", "grid.rmax", "grid.nodes", "grid.stretch",
    "init.kind", "init.amplitude", "init.width", "dt.cfl", "dt.max", "dt.react",
    "blowup.threshold", "run.t_end", "run.bc", "run.integrator", "run.frames", "run.reaction",
}
EXACT_KEYS = {"exact.n", "exact.alpha_hat", "exact.alpha", "exact.q", "exact.gamma", "exact.kappa",
              "exact.samples", "exact.t_max", "exact.r_max"}
CAPACITY_KEYS = FIELD_KEYS | {"q", "capacity.radii", "capacity.nu", "capacity.s", "capacity.nt",
                              "capacity.nr", "certificate.source"}
ENVELOPE_KEYS = FIELD_KEYS | {"envelope.radii"}


@dataclass
class Config:
    values: dict
    path: Path = field(default=Path("."))

    @classmethod
    def parse(cls, text: str, path=".") -> "Config":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"line {lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigurationError(f"line {lineno}: empty key")
            if key in values:
                raise ConfigurationError(f"line {lineno}: duplicate key {key}")
            values[key] = value
        return cls(values, Path(path))

    @classmethod
    def load(cls, path) -> "Config":
        path = Path(path)
        return cls.parse(path.read_text(), path)

    def canonical(self) -> str:
        return "\n".join(f"{k}={self.values[k]}" for k in sorted(self.values))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def require_known(self, allowed: Iterable[str]) -> None:
        allowed = set(allowed)
        for key in self.values:
            if key not in allowed:
                raise ConfigurationError(f"unknown config key: {key}")

    def __contains__(self, key):
        return key in self.values

    def text(self, key, default=None):
        if key in self.values:
            return self.values[key]
        if default is None:
            raise ConfigurationError(f"missing config key: {key}")
        return default

    def number(self, key, default=None) -> float:
        raw = self.text(key, None if default is None else repr(default))
        try:
            return float(raw)
        except ValueError:
            raise ConfigurationError(f"config key {key}: not a number: {raw!r}") from None

    def integer(self, key, default=None) -> int:
        raw = self.text(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError:
            raise ConfigurationError(f"config key {key}: not an integer: {raw!r}") from None

    def flag(self, key, default: bool) -> bool:
        raw = self.text(key, "true" if default else "false").lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"config key {key}: not a boolean: {raw!r}")

    def numbers(self, key, default=None) -> list:
        raw = self.text(key, None if default is None else ",".join(map(repr, default)))
        try:
            return [float(x) for x in raw.split(",") if x.strip()]
        except ValueError:
            raise ConfigurationError(f"config key {key}: not a number list: {raw!r}") from None

    def exact_numbers(self, key) -> list:
        """Comma list parsed as exact fractions (``1/3`` allowed)."""
        try:
            return [Fraction(x.strip()) for x in self.text(key).split(",") if x.strip()]
        except ValueError:
            raise ConfigurationError(f"config key {key}: not a number list") from None


def field_from_config(cfg: Config) -> CoefficientField:
    kind = cfg.text("field.kind", "power")
    n = cfg.integer("field.n", 1)
    if kind == "power":
        alpha = cfg.number("field.alpha", 2.0)
        if "field.c" in cfg:
            return CoefficientField.power(alpha, n=n, c_growth=cfg.number("field.c"))
        # default growth constant: smallest c valid for all R > 1
        expo = (2.0 - alpha) / 2.0
        c = 2.0**expo if expo >= 0 else 4.0 ** (-expo)
        return CoefficientField.power(alpha, n=n, c_growth=c)
    if kind == "constant":
        c = cfg.number("field.c") if "field.c" in cfg else None
        return CoefficientField.constant(cfg.number("field.value", 1.0), n=n, c_growth=c)
    if kind == "tabulated":
        table = Path(cfg.text("field.table"))
        if not table.is_absolute():
            table = cfg.path.parent / table
        return CoefficientField.from_csv(table, n=n, alpha=cfg.number("field.alpha", 2.0),
                                         c_growth=cfg.number("field.c", 1.0))
    raise ConfigurationError(f"config key field.kind: unknown kind {kind!r}")
