"""Method-of-lines integration of the corrected Galerkin systems.

The unknown is v_h = u - S. Diffusion is treated implicitly (theta scheme or
SBDF2); convection, reaction and all S-dependent terms are explicit, so each
step costs one tridiagonal solve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import fem
from .fem import QuadratureRule, TriDiagForm, UniformMesh
from .problem import (
    NO_CORRECTION,
    CornerExpansion,
    Kind,
    Level,
    ProblemSpec,
    Side,
    build_correction,
    s_boundary_dt,
    s_boundary_trace,
    s_eval,
)
from .special_functions import validate_s1_closed_form

__all__ = [
    "BoundaryMismatchError",
    "DivergenceError",
    "GalerkinOperator",
    "SolutionHistory",
    "StepSizeError",
    "TimeGrid",
    "apply_boundary",
    "integrate",
    "semi_discrete_rhs",
]

BLOWUP = 1e6
BOUNDARY_TOL = 1e-10


class DivergenceError(RuntimeError):
    pass


class StepSizeError(ValueError):
    pass


class BoundaryMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    t_final: float

    def __post_init__(self):
        if not (self.dt > 0 and self.t_final > 0):
            raise ValueError("dt and t_final must be positive")
        if abs(self.n_steps * self.dt - self.t_final) > 1e-12:
            raise ValueError(f"dt={self.dt!r} does not divide t_final={self.t_final!r}")

    @property
    def n_steps(self) -> int:
        return round(self.t_final / self.dt)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @classmethod
    def with_steps(cls, t_final: float, n_steps: int) -> "TimeGrid":
        return cls(t_final / n_steps, t_final)

    @classmethod
    def from_factor(cls, mesh: UniformMesh, t_final: float, dt_factor: float = 0.25,
                    dt_power: int = 1) -> "TimeGrid":
        """Largest dt <= dt_factor * dx**dt_power that divides t_final."""
        n = math.ceil(t_final / (dt_factor * mesh.dx**dt_power) - 1e-9)
        return cls.with_steps(t_final, max(n, 1))


@dataclass(frozen=True)
class SolutionHistory:
    mesh: UniformMesh
    times: np.ndarray
    v: np.ndarray
    u: np.ndarray
    correction: CornerExpansion = NO_CORRECTION
    # time after which the correction was folded into v (None: never)
    t_off: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def x(self) -> np.ndarray:
        return self.mesh.nodes


def apply_boundary(spec: ProblemSpec, c: CornerExpansion, t: float) -> tuple[float, float, float, float]:
    """Dirichlet values of v at x = 0, 1 and their time derivatives."""
    nu = spec.nu
    v0 = spec.g1.value(t) - s_boundary_trace(c, 0.0, t, nu)
    vN = spec.g2.value(t) - s_boundary_trace(c, 1.0, t, nu)
    if t > 0:
        d0 = s_boundary_dt(c, 0, t, nu)
        dN = s_boundary_dt(c, 1, t, nu)
    else:
        # at t = 0+ only the linear S1 trace at the treated corner moves
        d0 = dN = 0.0
        if c.active:
            if c.side is Side.LEFT:
                d0 = c.sign * c.alpha1
            else:
                dN = c.sign * c.alpha1
    return v0, vN, spec.g1.d1(t) - d0, spec.g2.d1(t) - dN


class GalerkinOperator:
    """Time-independent forms plus the explicit right-hand side terms."""

    def __init__(self, spec: ProblemSpec, c: CornerExpansion, mesh: UniformMesh,
                 rule: QuadratureRule | None = None, convection: str = "group",
                 refine_until: float = 0.0):
        if convection not in ("group", "consistent"):
            raise ValueError(f"unknown convection discretization {convection!r}")
        self.spec = spec
        self.c = c
        self.mesh = mesh
        self.rule = rule or QuadratureRule()
        self.convection = convection
        self.refine_until = refine_until
        self.mass = fem.assemble_mass(mesh)
        self.stiff = fem.assemble_stiffness(mesh)
        self.skew = fem.assemble_convection_skew(mesh)

    def explicit(self, t: float, v: np.ndarray) -> np.ndarray:
        """Non-diffusive part of F(v, t) on interior rows; S is taken at time t."""
        spec, c, mesh, nu = self.spec, self.c, self.mesh, self.spec.nu
        refine = c.active and t < self.refine_until
        if spec.kind is Kind.BURGERS:
            if self.convection == "group":
                out = 0.5 * fem.group_square_vector(self.skew, v)
            else:
                out = 0.5 * fem.consistent_square_vector(mesh, v)
            if c.active:
                out = out + fem.quad_s_coupling(mesh, self.rule, c, nu, t, refine).interior_matvec(v)
                out = out + fem.quad_s_vector(mesh, self.rule, c, nu, t, refine)
            return out
        return -fem.quad_reaction(mesh, self.rule, c, nu, t, v, spec.p, refine)

    def diffusion(self, v: np.ndarray) -> np.ndarray:
        return -self.spec.nu * self.stiff.interior_matvec(v)


def semi_discrete_rhs(spec: ProblemSpec, c: CornerExpansion, mesh: UniformMesh,
                      rule: QuadratureRule | None, t: float, v: np.ndarray,
                      op: GalerkinOperator | None = None) -> np.ndarray:
    """Right-hand side of M_II dv_I/dt = F for the interior unknowns.

    Includes all spatial terms with the known boundary-node mass couplings
    ``M[m, 0] v0' + M[m, N] vN'`` subtracted, using analytic boundary
    derivatives.
    """
    v = np.asarray(v, dtype=float)
    v0, vN, d0, dN = apply_boundary(spec, c, t)
    if abs(v[0] - v0) > BOUNDARY_TOL or abs(v[-1] - vN) > BOUNDARY_TOL:
        raise BoundaryMismatchError(
            f"boundary rows ({v[0]!r}, {v[-1]!r}) disagree with Dirichlet data ({v0!r}, {vN!r}) at t={t}"
        )
    op = op or GalerkinOperator(spec, c, mesh, rule)
    F = op.explicit(t, v) + op.diffusion(v)
    F[0] -= op.mass.lower[1] * d0
    F[-1] -= op.mass.upper[-2] * dN
    return F


def _banded(form: TriDiagForm) -> np.ndarray:
    # interior block in solve_banded's (1, 1) layout
    ab = np.zeros((3, form.size - 2))
    ab[0, 1:] = form.upper[1:-2]
    ab[1, :] = form.diag[1:-1]
    ab[2, :-1] = form.lower[2:-1]
    return ab


def _advective_speed(spec: ProblemSpec, mesh: UniformMesh) -> float:
    h = np.array([spec.h.value(x) for x in mesh.nodes])
    return float(max(np.max(np.abs(h)), abs(spec.g1.value(0.0)), abs(spec.g2.value(0.0))))


def _implicit_band(op: GalerkinOperator, a: float, b: float) -> TriDiagForm:
    # a * M + b * K
    m, k = op.mass, op.stiff
    return TriDiagForm(a * m.lower + b * k.lower, a * m.diag + b * k.diag, a * m.upper + b * k.upper)


def integrate(spec: ProblemSpec, level: Level | CornerExpansion, mesh: UniformMesh, grid: TimeGrid,
              rule: QuadratureRule | None = None, *, scheme: str = "theta", theta: float = 1.0,
              side: Side = Side.LEFT, convection: str = "group", t_off: float | None = None,
              check_step: bool = True) -> SolutionHistory:
    """Advance v from nodal h to ``grid.t_final`` and reconstruct u = v + S.

    ``scheme="theta"`` solves
    ``(M + theta dt nu K) v^{n+1} = (M - (1-theta) dt nu K) v^n + dt E(v^n, t_{n+1})``.
    ``scheme="sbdf2"`` takes that step once with theta = 1, then continues with
    ``(3/2 M + dt nu K) v^{n+1} = M (2 v^n - v^{n-1}/2) + dt (2 E^n - E^{n-1})``
    where ``E^n = E(v^n, t_n)``. Dirichlet rows are imposed at the new level and
    their couplings moved to the right-hand side.
    """
    if scheme not in ("theta", "sbdf2"):
        raise ValueError(f"unknown time scheme {scheme!r}")
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    if scheme == "sbdf2":
        theta = 1.0
    c = level if isinstance(level, CornerExpansion) else build_correction(spec, level, side)
    if c.level is Level.C2:
        validate_s1_closed_form(spec.nu)
    rule = rule or QuadratureRule()
    dt, nu, N = grid.dt, spec.nu, mesh.N
    if check_step and spec.kind is Kind.BURGERS:
        speed = _advective_speed(spec, mesh)
        if dt * speed > mesh.dx:
            raise StepSizeError(f"dt={dt:.3e} violates the advective bound dx/|u|={mesh.dx / speed:.3e}")

    x = mesh.nodes
    times = grid.times
    op = GalerkinOperator(spec, c, mesh, rule, convection, refine_until=10.0 * dt)
    one_step = _implicit_band(op, 1.0, theta * dt * nu)
    one_step_ab = _banded(one_step)
    bdf = _implicit_band(op, 1.5, dt * nu)
    bdf_ab = _banded(bdf)

    V = np.empty((len(times), N + 1))
    U = np.empty_like(V)
    v = np.array([spec.h.value(xi) for xi in x])
    v[0], v[-1] = apply_boundary(spec, c, 0.0)[:2]
    V[0] = v
    U[0] = v + np.array([s_boundary_trace(c, xi, 0.0, nu) if xi in (0.0, 1.0) else 0.0 for xi in x])
    switched_at = None
    v_prev = E_prev = None

    for k in range(grid.n_steps):
        t_new = times[k + 1]
        v0, vN = apply_boundary(spec, op.c, t_new)[:2]
        if scheme == "theta" or v_prev is None:
            form, ab = one_step, one_step_ab
            rhs = op.mass.interior_matvec(v) + dt * op.explicit(t_new, v)
            if theta < 1.0:
                rhs += (1.0 - theta) * dt * op.diffusion(v)
        else:
            form, ab = bdf, bdf_ab
            E = op.explicit(times[k], v)
            extrap = E if E_prev is None else 2.0 * E - E_prev
            rhs = op.mass.interior_matvec(2.0 * v - 0.5 * v_prev) + dt * extrap
            E_prev = E
        rhs[0] -= form.lower[1] * v0
        rhs[-1] -= form.upper[-2] * vN
        v_prev = v
        v = np.empty(N + 1)
        v[0], v[-1] = v0, vN
        v[1:-1] = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > BLOWUP:
            raise DivergenceError(f"solution exceeded {BLOWUP:g} at t={t_new:.6g}")
        u = v + s_eval(op.c, x, t_new, nu)
        if t_off is not None and switched_at is None and op.c.active and t_new >= t_off:
            # fold the singular part into v and continue uncorrected
            v = u.copy()
            v_prev = v_prev + s_eval(op.c, x, times[k], nu) if k > 0 else None
            op.c = CornerExpansion(Level.NONE, side=op.c.side, sign=op.c.sign)
            E_prev = None
            switched_at = t_new
        V[k + 1] = v
        U[k + 1] = u

    return SolutionHistory(mesh, times, V, U, c, switched_at,
                           meta={"scheme": scheme, "theta": theta, "dt": dt, "convection": convection,
                                 "quad_points": rule.points_per_element})
