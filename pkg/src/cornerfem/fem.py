"""Piecewise-linear Galerkin forms on a uniform mesh of [0, 1].

Forms are stored as tridiagonal bands over all nodes 0..N. For a form
``A[m, n]`` the row index ``m`` is the test function and ``n`` the trial
function, e.g. the convection form is ``A[m, n] = (phi_n, phi_m')``.
Load vectors are returned for the interior test functions m = 1..N-1 only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .problem import CornerExpansion, ReactionPolynomial, s_eval

__all__ = [
    "QuadratureRule",
    "TriDiagForm",
    "UniformMesh",
    "assemble_convection_skew",
    "assemble_mass",
    "assemble_stiffness",
    "consistent_square_vector",
    "group_square_vector",
    "quad_reaction",
    "quad_s_coupling",
    "quad_s_vector",
]


@dataclass(frozen=True)
class UniformMesh:
    n_segments: int

    def __post_init__(self):
        if int(self.n_segments) != self.n_segments or self.n_segments < 4:
            raise ValueError(f"mesh needs an integer number of segments >= 4, got {self.n_segments!r}")

    @property
    def N(self) -> int:
        return self.n_segments

    @property
    def dx(self) -> float:
        return 1.0 / self.n_segments

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_segments + 1) * self.dx


@dataclass
class TriDiagForm:
    """Tridiagonal matrix over nodes 0..N.

    ``lower[i] = A[i, i-1]`` (``lower[0]`` unused), ``upper[i] = A[i, i+1]``
    (``upper[N]`` unused).
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    @classmethod
    def zeros(cls, n_nodes: int) -> "TriDiagForm":
        return cls(np.zeros(n_nodes), np.zeros(n_nodes), np.zeros(n_nodes))

    @property
    def size(self) -> int:
        return len(self.diag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[1:] += self.lower[1:] * v[:-1]
        out[:-1] += self.upper[:-1] * v[1:]
        return out

    def interior_matvec(self, v: np.ndarray) -> np.ndarray:
        """Rows 1..N-1 applied to the full nodal vector ``v``."""
        return self.lower[1:-1] * v[:-2] + self.diag[1:-1] * v[1:-1] + self.upper[1:-1] * v[2:]

    def to_dense(self) -> np.ndarray:
        n = self.size
        A = np.diag(self.diag)
        A[np.arange(1, n), np.arange(n - 1)] = self.lower[1:]
        A[np.arange(n - 1), np.arange(1, n)] = self.upper[:-1]
        return A

    def scaled(self, a: float) -> "TriDiagForm":
        return TriDiagForm(a * self.lower, a * self.diag, a * self.upper)


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule on each element.

    When ``refine`` is requested, the ``ceil(N * refine_fraction)`` elements
    next to the corrected corner use ``refine_factor`` times as many points.
    """

    points_per_element: int = 5
    refine_factor: int = 4
    refine_fraction: float = 0.125
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.points_per_element < 2:
            raise ValueError("need at least 2 quadrature points per element")

    def reference(self, n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Abscissae and weights on [0, 1] (weights sum to 1)."""
        n = n or self.points_per_element
        if n not in self._cache:
            xg, wg = np.polynomial.legendre.leggauss(n)
            self._cache[n] = (0.5 * (xg + 1.0), 0.5 * wg)
        return self._cache[n]


ElementFn = Callable[..., np.ndarray]


def _element_moments(mesh: UniformMesh, rule: QuadratureRule, f: ElementFn,
                     refine_elems: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-element integrals of f, f*phi_left and f*phi_right.

    ``f(x, lam, e)`` receives physical points and the local coordinate in
    [0, 1] (both shaped ``(n_elem, n_points)``) and the element indices
    (shaped ``(n_elem, 1)``).
    """
    N, dx = mesh.N, mesh.dx
    I = np.zeros(N)
    J0 = np.zeros(N)
    J1 = np.zeros(N)
    fine = np.zeros(N, dtype=bool)
    if refine_elems is not None:
        fine[refine_elems] = True
    for mask, npts in ((~fine, rule.points_per_element),
                       (fine, rule.points_per_element * rule.refine_factor)):
        if not mask.any():
            continue
        lam, w = rule.reference(npts)
        e = np.nonzero(mask)[0]
        x = (e[:, None] + lam[None, :]) * dx
        lamb = np.broadcast_to(lam, x.shape)
        vals = f(x, lamb, e[:, None]) * dx
        I[e] = vals @ w
        J0[e] = (vals * (1.0 - lamb)) @ w
        J1[e] = (vals * lamb) @ w
    return I, J0, J1


def _refined_elements(mesh: UniformMesh, rule: QuadratureRule, c: CornerExpansion, refine: bool):
    if not refine:
        return None
    k = math.ceil(mesh.N * rule.refine_fraction)
    idx = np.arange(k)
    return idx if c.side.value == "left" else mesh.N - 1 - idx


def assemble_mass(mesh: UniformMesh) -> TriDiagForm:
    """(phi_n, phi_m): dx/6 * [1, 4, 1] in the interior, dx/3 on boundary rows."""
    n, dx = mesh.N + 1, mesh.dx
    diag = np.full(n, 2.0 * dx / 3.0)
    diag[[0, -1]] = dx / 3.0
    off = np.full(n, dx / 6.0)
    return TriDiagForm(off.copy(), diag, off.copy())


def assemble_stiffness(mesh: UniformMesh) -> TriDiagForm:
    """(phi_n', phi_m'): 1/dx * [-1, 2, -1], 1/dx on boundary rows."""
    n, dx = mesh.N + 1, mesh.dx
    diag = np.full(n, 2.0 / dx)
    diag[[0, -1]] = 1.0 / dx
    off = np.full(n, -1.0 / dx)
    return TriDiagForm(off.copy(), diag, off.copy())


def _coupling_from_moments(J0: np.ndarray, J1: np.ndarray, dx: float) -> TriDiagForm:
    # on element e, phi_e' = -1/dx and phi_{e+1}' = +1/dx
    n = len(J0) + 1
    form = TriDiagForm.zeros(n)
    form.lower[1:] = J0 / dx
    form.upper[:-1] = -J1 / dx
    form.diag[1:] += J1 / dx
    form.diag[:-1] -= J0 / dx
    return form


def assemble_convection_skew(mesh: UniformMesh) -> TriDiagForm:
    """(phi_n, phi_m'): +1/2 below, 0 on, -1/2 above the interior diagonal."""
    half = np.full(mesh.N, 0.5 * mesh.dx)
    return _coupling_from_moments(half, half, mesh.dx)


def quad_s_coupling(mesh: UniformMesh, rule: QuadratureRule, c: CornerExpansion, nu: float,
                    t: float, refine: bool = False, s_func: ElementFn | None = None) -> TriDiagForm:
    """B[m, n] = (S phi_n, phi_m') by composite quadrature.

    ``s_func(x, t)`` overrides the corner expansion (used to test the form).
    """
    if s_func is None and not c.active:
        return TriDiagForm.zeros(mesh.N + 1)
    S = s_func if s_func is not None else (lambda x, tt: s_eval(c, x, tt, nu))
    _, J0, J1 = _element_moments(mesh, rule, lambda x, lam, e: S(x, t),
                                 _refined_elements(mesh, rule, c, refine))
    return _coupling_from_moments(J0, J1, mesh.dx)


def quad_s_vector(mesh: UniformMesh, rule: QuadratureRule, c: CornerExpansion, nu: float,
                  t: float, refine: bool = False) -> np.ndarray:
    """r_m = 1/2 (S^2, phi_m') for m = 1..N-1."""
    if not c.active:
        return np.zeros(mesh.N - 1)
    I, _, _ = _element_moments(mesh, rule, lambda x, lam, e: s_eval(c, x, t, nu) ** 2,
                               _refined_elements(mesh, rule, c, refine))
    return 0.5 * (I[:-1] - I[1:]) / mesh.dx


def quad_reaction(mesh: UniformMesh, rule: QuadratureRule, c: CornerExpansion, nu: float,
                  t: float, v: np.ndarray, p: ReactionPolynomial, refine: bool = False) -> np.ndarray:
    """rho_m = (p(v_h + S), phi_m) for m = 1..N-1, v_h the P1 interpolant of v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (mesh.N + 1,):
        raise ValueError(f"expected {mesh.N + 1} nodal values, got shape {v.shape}")
    if p.is_zero:
        return np.zeros(mesh.N - 1)
    def integrand(x, lam, e):
        u = v[e] * (1.0 - lam) + v[e + 1] * lam
        if c.active:
            u = u + s_eval(c, x, t, nu)
        return p(u)

    _, J0, J1 = _element_moments(mesh, rule, integrand, _refined_elements(mesh, rule, c, refine))
    return J1[:-1] + J0[1:]


def group_square_vector(skew: TriDiagForm, v: np.ndarray) -> np.ndarray:
    """sum_n v_n^2 (phi_n, phi_m') for m = 1..N-1 (group interpolation of v^2)."""
    return skew.interior_matvec(v * v)


def consistent_square_vector(mesh: UniformMesh, v: np.ndarray) -> np.ndarray:
    """(v_h^2, phi_m') for m = 1..N-1, exact for the P1 interpolant."""
    a, b = v[:-1], v[1:]
    I = mesh.dx * (a * a + a * b + b * b) / 3.0
    return (I[:-1] - I[1:]) / mesh.dx
