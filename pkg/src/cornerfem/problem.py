"""Initial-boundary-value problem data and corner compatibility defects.

Two equations are supported on 0 < x < 1:

    Burgers:            u_t + u u_x - nu u_xx = 0
    reaction-diffusion: u_t - nu u_xx + p(u) = 0

with u(0, t) = g1(t), u(1, t) = g2(t), u(x, 0) = h(x).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .special_functions import s0, s0_dt, s1

__all__ = [
    "BoundarySignal",
    "CornerExpansion",
    "Kind",
    "Level",
    "ProblemSpec",
    "ReactionPolynomial",
    "Side",
    "SmoothProfile",
    "UnsupportedConfigurationError",
    "alpha0",
    "alpha1",
    "build_correction",
    "burgers_paper",
    "heat_sine",
    "polynomial_signal",
    "rd_cubic_paper",
    "s_boundary_dt",
    "s_eval",
    "sine_profile",
]

Func = Callable[[float], float]

# defects below this are treated as compatible when picking a corner
COMPAT_TOL = 1e-10


class Kind(enum.Enum):
    BURGERS = "burgers"
    REACTION_DIFFUSION = "reaction_diffusion"


class Level(enum.Enum):
    NONE = "none"
    C1 = "c1"
    C2 = "c2"


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH = "both"


class UnsupportedConfigurationError(ValueError):
    pass


def _fd_mismatch(f: Func, df: Func, points: np.ndarray, delta: float = 1e-5) -> float:
    worst = 0.0
    for x in points:
        fd = (f(x + delta) - f(x - delta)) / (2 * delta)
        exact = df(x)
        worst = max(worst, abs(fd - exact) / max(1.0, abs(exact)))
    return worst


@dataclass(frozen=True)
class SmoothProfile:
    """Initial profile h with analytic first and second derivatives."""

    value: Func
    d1: Func
    d2: Func

    def check(self, tol: float = 1e-5) -> None:
        pts = np.linspace(0.0, 1.0, 52)[1:-1]
        for name, f in (("value", self.value), ("d1", self.d1), ("d2", self.d2)):
            if not all(math.isfinite(f(x)) for x in pts):
                raise ValueError(f"profile {name} is not finite on [0, 1]")
        if _fd_mismatch(self.value, self.d1, pts) > tol:
            raise ValueError("profile d1 is inconsistent with value")
        if _fd_mismatch(self.d1, self.d2, pts) > tol:
            raise ValueError("profile d2 is inconsistent with d1")

    def mirrored(self, sign: float = 1.0) -> "SmoothProfile":
        """Profile of ``sign * h(1 - x)``."""
        return SmoothProfile(
            value=lambda x: sign * self.value(1.0 - x),
            d1=lambda x: -sign * self.d1(1.0 - x),
            d2=lambda x: sign * self.d2(1.0 - x),
        )


@dataclass(frozen=True)
class BoundarySignal:
    """Boundary datum g(t) with its analytic time derivative."""

    value: Func
    d1: Func

    def check(self, T: float, tol: float = 1e-5) -> None:
        pts = np.linspace(0.0, T, 52)[1:-1]
        if not all(math.isfinite(self.value(t)) and math.isfinite(self.d1(t)) for t in pts):
            raise ValueError("boundary signal is not finite on [0, T]")
        if _fd_mismatch(self.value, self.d1, pts, delta=1e-5 * max(T, 1e-3)) > tol:
            raise ValueError("boundary signal d1 is inconsistent with value")

    def scaled(self, sign: float) -> "BoundarySignal":
        if sign == 1.0:
            return self
        return BoundarySignal(value=lambda t: sign * self.value(t), d1=lambda t: sign * self.d1(t))


@dataclass(frozen=True)
class ReactionPolynomial:
    """p(u) = sum_k coeffs[k] u^k, odd degree with positive leading coefficient.

    The zero polynomial is accepted as the degenerate pure-diffusion case.
    """

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(a) for a in self.coeffs)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)
        if self.is_zero:
            return
        degree = len(c) - 1
        if degree % 2 == 0 or c[-1] <= 0:
            raise ValueError(
                f"reaction polynomial must have odd degree and positive leading coefficient, got {c}"
            )

    @property
    def is_zero(self) -> bool:
        return all(a == 0.0 for a in self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, u):
        # Horner, works elementwise on arrays
        out = np.zeros_like(np.asarray(u, dtype=float)) + self.coeffs[-1]
        for a in reversed(self.coeffs[:-1]):
            out = out * u + a
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ProblemSpec:
    kind: Kind
    nu: float
    g1: BoundarySignal
    g2: BoundarySignal
    h: SmoothProfile
    T: float
    p: ReactionPolynomial | None = None
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if (self.p is not None) != (self.kind is Kind.REACTION_DIFFUSION):
            raise ValueError("a reaction polynomial is required for, and only for, reaction-diffusion")
        self.h.check()
        self.g1.check(self.T)
        self.g2.check(self.T)

    def mirrored(self) -> "ProblemSpec":
        """The same problem in the reflected coordinate x -> 1 - x.

        Burgers is only invariant under the reflection combined with u -> -u,
        so its data change sign; reaction-diffusion is reflected as is.
        """
        sign = self.mirror_sign
        return ProblemSpec(
            kind=self.kind,
            nu=self.nu,
            g1=self.g2.scaled(sign),
            g2=self.g1.scaled(sign),
            h=self.h.mirrored(sign),
            T=self.T,
            p=self.p,
            name=self.name + "_mirrored",
        )

    @property
    def mirror_sign(self) -> float:
        return -1.0 if self.kind is Kind.BURGERS else 1.0


def alpha0(spec: ProblemSpec) -> float:
    """Zeroth-order defect ``g1(0) - h(0)`` at the left corner."""
    return spec.g1.value(0.0) - spec.h.value(0.0)


def alpha1(spec: ProblemSpec) -> float:
    """First-order defect at the left corner.

    Burgers: ``g1'(0) + h(0) h'(0) - nu h''(0)``;
    reaction-diffusion: ``g1'(0) - nu h''(0) + p(h(0))``.
    """
    h0 = spec.h.value(0.0)
    base = spec.g1.d1(0.0) - spec.nu * spec.h.d2(0.0)
    if spec.kind is Kind.BURGERS:
        return base + h0 * spec.h.d1(0.0)
    return base + spec.p(h0)


@dataclass(frozen=True)
class CornerExpansion:
    """Singular part S = sign * (alpha0 S0(d, t) + alpha1 S1(d, t)).

    ``d`` is the distance to the treated corner (x for LEFT, 1 - x for RIGHT).
    For a right corner the defects are those of the mirrored problem and
    ``sign`` carries the mirror's data sign.
    """

    level: Level = Level.NONE
    alpha0: float = 0.0
    alpha1: float = 0.0
    side: Side = Side.LEFT
    sign: float = 1.0

    def __post_init__(self):
        if self.side is Side.BOTH:
            raise ValueError("a corner expansion lives at a single corner")
        if self.level is Level.NONE and (self.alpha0 or self.alpha1):
            raise ValueError("level NONE carries no defects")
        if self.level is Level.C1 and self.alpha1:
            raise ValueError("level C1 carries alpha0 only")

    @property
    def active(self) -> bool:
        return self.level is not Level.NONE

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return x if self.side is Side.LEFT else 1.0 - x


NO_CORRECTION = CornerExpansion()


def _defects(spec: ProblemSpec, side: Side) -> tuple[float, float]:
    target = spec if side is Side.LEFT else spec.mirrored()
    return alpha0(target), alpha1(target)


def build_correction(spec: ProblemSpec, level: Level, side: Side = Side.LEFT) -> CornerExpansion:
    """Build the corner expansion for ``level`` at ``side``.

    ``Side.BOTH`` picks whichever corner is incompatible; having both corners
    incompatible is not supported.
    """
    level = Level(level)
    side = Side(side)
    if side is Side.BOTH:
        bad = [s for s in (Side.LEFT, Side.RIGHT)
               if any(abs(a) > COMPAT_TOL for a in _defects(spec, s))]
        if len(bad) == 2 and level is not Level.NONE:
            raise UnsupportedConfigurationError(
                "both corners are incompatible; simultaneous two-corner correction is not supported"
            )
        side = bad[0] if bad else Side.LEFT
    sign = 1.0 if side is Side.LEFT else spec.mirror_sign
    if level is Level.NONE:
        return CornerExpansion(Level.NONE, 0.0, 0.0, side, sign)
    a0, a1 = _defects(spec, side)
    if level is Level.C1:
        a1 = 0.0
    return CornerExpansion(level, a0, a1, side, sign)


def s_eval(c: CornerExpansion, x, t, nu: float):
    """Evaluate S at (x, t); zero everywhere when no correction is active."""
    if not c.active:
        out = np.zeros(np.broadcast(np.asarray(x), np.asarray(t)).shape)
        return float(out) if out.ndim == 0 else out
    d = c.distance(x)
    out = c.alpha0 * np.asarray(s0(d, t, nu))
    if c.level is Level.C2 and c.alpha1 != 0.0:
        out = out + c.alpha1 * np.asarray(s1(d, t, nu))
    out = c.sign * out
    return float(out) if np.ndim(out) == 0 else out


def s_boundary_trace(c: CornerExpansion, x: float, t: float, nu: float) -> float:
    """S at a boundary node, using the limit S(corner, 0+) = alpha0 at t = 0."""
    if not c.active:
        return 0.0
    if t == 0.0:
        return c.sign * c.alpha0 if float(c.distance(x)) == 0.0 else 0.0
    return float(s_eval(c, x, t, nu))


def s_boundary_dt(c: CornerExpansion, x: float, t: float, nu: float) -> float:
    """Time derivative of S at the boundary point x in {0, 1}.

    Uses dS1/dt = S0, so the treated corner sees exactly alpha1.
    """
    if t <= 0:
        raise ValueError("s_boundary_dt requires t > 0")
    if x not in (0, 1):
        raise ValueError("boundary point must be 0 or 1")
    if not c.active:
        return 0.0
    d = float(c.distance(x))
    if d == 0.0:
        return c.sign * c.alpha1
    return c.sign * (c.alpha0 * s0_dt(d, t, nu) + c.alpha1 * s0(d, t, nu))


# -- data families -----------------------------------------------------------

def sine_profile(a: float, b: float, c: float) -> SmoothProfile:
    """``a * sin(b*pi*x + c*pi)``."""
    w, ph = b * math.pi, c * math.pi
    return SmoothProfile(
        value=lambda x: a * math.sin(w * x + ph),
        d1=lambda x: a * w * math.cos(w * x + ph),
        d2=lambda x: -a * w * w * math.sin(w * x + ph),
    )


def polynomial_signal(coeffs: Sequence[float] = (0.0,)) -> BoundarySignal:
    """``g(t) = sum_k coeffs[k] t^k``."""
    c = tuple(float(a) for a in coeffs) or (0.0,)
    dc = tuple(k * c[k] for k in range(1, len(c))) or (0.0,)

    def ev(cs):
        def f(t):
            acc = 0.0
            for a in reversed(cs):
                acc = acc * t + a
            return acc
        return f

    return BoundarySignal(value=ev(c), d1=ev(dc))


def burgers_paper(nu: float = 0.2, T: float = 0.05) -> ProblemSpec:
    """Burgers test case: g1 = g2 = 0, h(x) = -sin(5 pi x/4 + 3 pi/4)."""
    return ProblemSpec(
        kind=Kind.BURGERS,
        nu=nu,
        g1=polynomial_signal(),
        g2=polynomial_signal(),
        h=sine_profile(-1.0, 1.25, 0.75),
        T=T,
        name="burgers_paper",
    )


def rd_cubic_paper(nu: float = 0.2, T: float = 0.05) -> ProblemSpec:
    """Reaction-diffusion test case: p(u) = u^3, h(x) = sin(7 pi x/4 + pi/4)."""
    return ProblemSpec(
        kind=Kind.REACTION_DIFFUSION,
        nu=nu,
        g1=polynomial_signal(),
        g2=polynomial_signal(),
        h=sine_profile(1.0, 1.75, 0.25),
        T=T,
        p=ReactionPolynomial((0.0, 0.0, 0.0, 1.0)),
        name="rd_cubic_paper",
    )


def heat_sine(nu: float = 0.2, T: float = 0.1) -> ProblemSpec:
    """Compatible linear heat problem with exact solution exp(-nu pi^2 t) sin(pi x)."""
    return ProblemSpec(
        kind=Kind.REACTION_DIFFUSION,
        nu=nu,
        g1=polynomial_signal(),
        g2=polynomial_signal(),
        h=sine_profile(1.0, 1.0, 0.0),
        T=T,
        p=ReactionPolynomial((0.0,)),
        name="heat_sine",
    )


PRESETS = {
    "burgers_paper": burgers_paper,
    "rd_cubic_paper": rd_cubic_paper,
    "heat_sine": heat_sine,
}
