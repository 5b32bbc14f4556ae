"""Radially symmetric interaction potentials.

Units are hbar = 2m = 1, so the pair equation reads (-Delta + v/2) f = lambda f
and lengths are inverse square-root energies.  All potentials are nonnegative,
radial and compactly supported; ``support_radius`` is the radius beyond which
v vanishes identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

KINDS = ("square-well", "gaussian-bump", "tabulated")


@dataclass(frozen=True)
class RadialPotential:
    """Nonnegative compactly supported radial potential v(r).

    kind            one of ``square-well``, ``gaussian-bump``, ``tabulated``
    strength        overall energy scale (V0)
    range_          length scale b; the support radius for the analytic kinds
    support_radius  radius beyond which v vanishes
    smooth          True if v is C^infinity (needed by the high-frequency
                    decay checks; the square well is only piecewise smooth)
    """

    kind: str
    strength: float
    range_: float
    support_radius: float
    smooth: bool
    table: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown potential kind {self.kind!r}")
        if self.strength < 0:
            raise InvalidInputError("potential strength must be nonnegative")
        if self.range_ <= 0 or self.support_radius <= 0:
            raise InvalidInputError("potential range must be positive")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "square-well":
            # v = 2 V0 inside the well, so v/2 = V0 in the pair equation;
            # the closed support (r <= b) keeps ODE endpoint stages consistent
            return np.where(r <= self.range_, 2.0 * self.strength, 0.0)
        if self.kind == "gaussian-bump":
            b = self.range_
            out = np.zeros_like(r)
            inside = r < b
            x2 = (r[inside] / b) ** 2
            out[inside] = 2.0 * self.strength * np.exp(1.0 - 1.0 / (1.0 - x2))
            return out
        r_tab, v_tab = self.table
        return np.interp(r, r_tab, v_tab, left=v_tab[0], right=0.0)

    @property
    def is_zero(self) -> bool:
        return self.strength == 0.0

    def check_nonnegative(self, n_samples: int = 2048) -> None:
        rs = np.linspace(0.0, self.support_radius, n_samples)
        if np.any(self(rs) < 0.0):
            raise InvalidInputError("potential has negative samples")


def square_well(V0: float, b: float) -> RadialPotential:
    """v(r) = 2 V0 for r < b, zero outside."""
    return RadialPotential("square-well", V0, b, b, smooth=False)


def gaussian_bump(V0: float, b: float) -> RadialPotential:
    """Smooth compactly supported bump, v(0) = 2 V0, support radius b."""
    return RadialPotential("gaussian-bump", V0, b, b, smooth=True)


def tabulated(r: np.ndarray, v: np.ndarray) -> RadialPotential:
    r = np.asarray(r, float)
    v = np.asarray(v, float)
    if r.ndim != 1 or r.shape != v.shape or len(r) < 2:
        raise InvalidInputError("tabulated potential needs matching 1-d arrays")
    if np.any(np.diff(r) <= 0):
        raise InvalidInputError("tabulated radii must be strictly increasing")
    if np.any(v < 0):
        raise InvalidInputError("tabulated potential must be nonnegative")
    pot = RadialPotential(
        "tabulated",
        strength=float(np.max(v)) if np.max(v) > 0 else 0.0,
        range_=float(r[-1]),
        support_radius=float(r[-1]),
        smooth=False,
        table=(r.copy(), v.copy()),
    )
    return pot


def zero_potential(b: float = 1.0) -> RadialPotential:
    """The free case v = 0 (kept as a square well of zero strength)."""
    return RadialPotential("square-well", 0.0, b, b, smooth=True)


def from_config(cfg: dict) -> RadialPotential:
    """Build a potential from a ``kind``/``strength``/``range`` mapping."""
    try:
        kind = cfg["kind"]
        strength = float(cfg["strength"])
        rng = float(cfg["range"])
    except KeyError as exc:
        raise InvalidInputError(f"potential config missing key {exc}") from exc
    if kind == "square-well":
        return square_well(strength, rng)
    if kind == "gaussian-bump":
        return gaussian_bump(strength, rng)
    raise InvalidInputError(f"cannot build potential of kind {kind!r} from config")
