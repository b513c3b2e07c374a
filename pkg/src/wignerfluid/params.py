"""Physical constants and equilibrium parameters in normalized units.

Every module works in one internal unit system whose scales are chosen by
the user. The defaults (m = q = eps0 = n0 = 1) make the plasma frequency
equal to one, so frequencies read directly in units of omega_p. None of
these conventions come from a physical SI mapping; they are a numerical
choice to keep magnitudes of order unity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

__all__ = [
    "PhysicalSetup",
    "EquilibriumPressure",
    "plasma_frequency",
    "quantum_parameter",
    "hbar_from_quantum_parameter",
    "RunParameters",
    "parse_config_text",
    "load_config",
]


@dataclass(frozen=True)
class PhysicalSetup:
    n0: float = 1.0
    q_charge: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    c_light: float = 10.0
    eps0: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValueError(f"{f.name} must be a finite real number, got {value!r}")
            # hbar = 0 is allowed: it is the classical limit used throughout the tests
            if f.name == "hbar":
                if value < 0:
                    raise ValueError("hbar must be non-negative")
            elif value <= 0:
                raise ValueError(f"{f.name} must be strictly positive, got {value!r}")

    @property
    def omega_p(self) -> float:
        return plasma_frequency(self)

    def with_hbar(self, hbar: float) -> "PhysicalSetup":
        return replace(self, hbar=hbar)


@dataclass(frozen=True)
class EquilibriumPressure:
    """Gyrotropic equilibrium pressure, P_perp across and P_par along z."""

    p_perp: float
    p_par: float

    def __post_init__(self):
        if self.p_perp < 0 or self.p_par < 0:
            raise ValueError("pressures must be non-negative")

    def thermal_velocity(self, setup: PhysicalSetup) -> float:
        return math.sqrt((2.0 * self.p_perp + self.p_par) / (setup.mass * setup.n0))

    def tensor(self):
        import numpy as np

        return np.diag([self.p_perp, self.p_perp, self.p_par]).astype(float)

    @classmethod
    def isotropic(cls, p: float) -> "EquilibriumPressure":
        return cls(p, p)


def plasma_frequency(setup: PhysicalSetup) -> float:
    return math.sqrt(setup.n0 * setup.q_charge**2 / (setup.mass * setup.eps0))


def quantum_parameter(setup: PhysicalSetup, k: float, v0: float) -> float:
    """Dimensionless quantum parameter H = hbar k / (2 m v0)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if v0 <= 0:
        raise ValueError("v0 must be positive; v0 = 0 is degenerate")
    return setup.hbar * k / (2.0 * setup.mass * v0)


def hbar_from_quantum_parameter(H: float, k_ref: float, mass: float, v0: float) -> float:
    """Invert H = hbar k_ref / (2 m v0) for hbar."""
    if k_ref <= 0 or v0 <= 0:
        raise ValueError("k_ref and v0 must be positive")
    if H < 0:
        raise ValueError("H must be non-negative")
    return 2.0 * mass * v0 * H / k_ref


# ---------------------------------------------------------------------------
# key = value configuration


@dataclass
class RunParameters:
    """Flat parameter set read from a config file and/or CLI flags.

    ``hbar`` may be given directly, or implicitly through ``H`` at the
    reference wavenumber ``k_ref`` (with ``v0``). ``c_light`` defaults to
    ``10 * v0`` and the pressures default to ``m n0 v0**2``.
    """

    n0: float = 1.0
    q_charge: float = 1.0
    mass: float = 1.0
    eps0: float = 1.0
    v0: float = 1.0
    hbar: float | None = None
    H: float | None = None
    k_ref: float | None = None
    c_light: float | None = None
    p_perp: float | None = None
    p_par: float | None = None

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def update(self, values: dict) -> None:
        known = set(self.keys())
        for key, value in values.items():
            if key not in known:
                raise KeyError(f"unknown parameter {key!r}")
            setattr(self, key, float(value))

    def resolve_hbar(self) -> float:
        if self.hbar is not None:
            if self.H is not None and self.k_ref is not None:
                implied = hbar_from_quantum_parameter(self.H, self.k_ref, self.mass, self.v0)
                if not math.isclose(implied, self.hbar, rel_tol=1e-12, abs_tol=0.0):
                    raise ValueError(
                        f"hbar={self.hbar} conflicts with H={self.H} at k_ref={self.k_ref} "
                        f"(implies hbar={implied})"
                    )
            return self.hbar
        if self.H is not None:
            if self.k_ref is None:
                raise ValueError("H given without k_ref")
            return hbar_from_quantum_parameter(self.H, self.k_ref, self.mass, self.v0)
        return 1.0

    def setup(self) -> PhysicalSetup:
        c = self.c_light if self.c_light is not None else 10.0 * self.v0
        return PhysicalSetup(
            n0=self.n0,
            q_charge=self.q_charge,
            mass=self.mass,
            hbar=self.resolve_hbar(),
            c_light=c,
            eps0=self.eps0,
        )

    def pressure(self) -> EquilibriumPressure:
        p_default = self.mass * self.n0 * self.v0**2
        return EquilibriumPressure(
            p_perp=p_default if self.p_perp is None else self.p_perp,
            p_par=p_default if self.p_par is None else self.p_par,
        )


def parse_config_text(text: str) -> dict[str, float]:
    """Parse ``name = value`` lines; ``#`` starts a comment."""
    out: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'name = value', got {raw!r}")
        name, value = (s.strip() for s in line.split("=", 1))
        if not name.isidentifier():
            raise ValueError(f"line {lineno}: malformed key {name!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise ValueError(f"line {lineno}: value for {name!r} is not a number: {value!r}") from None
    return out


def load_config(path: str | Path) -> RunParameters:
    params = RunParameters()
    params.update(parse_config_text(Path(path).read_text()))
    return params
