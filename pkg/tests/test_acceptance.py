"""Acceptance criteria 1-9.

Each criterion runs at its stated tolerance and reports one PASS/FAIL line.
Run under pytest (lines appear in the terminal summary) or directly:

    python tests/test_acceptance.py
"""
from __future__ import annotations

import functools
import io
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad

from cornerfem.analysis import convergence_study, max_error_evolution, run_with_reference
from cornerfem.cli import cmd_compat, cmd_solve, parse_config
from cornerfem.fem import UniformMesh, assemble_convection_skew, assemble_mass, assemble_stiffness
from cornerfem.problem import Level, Side, alpha1, build_correction, s_eval, s_boundary_trace
from cornerfem.special_functions import s0, s1, validate_s1_closed_form
from cornerfem.timestep import TimeGrid, apply_boundary, integrate

NU = 0.2
N_LIST = (32, 64, 128, 256)
RESULTS: dict[int, tuple[bool, str]] = {}


def config(preset, **extra):
    lines = [f"preset = {preset}"] + [f"{k} = {v}" for k, v in extra.items()]
    return parse_config("\n".join(lines))


@functools.lru_cache(maxsize=None)
def solve_max_errors(preset):
    """Max-over-time comparative error at N = 128, N_ref = 1024, per level."""
    out, peak_frac = {}, {}
    for level in Level:
        cfg = config(preset, level=level.value, N=128, N_ref=1024)
        _, _, err = run_with_reference(cfg.spec, level, cfg.N, cfg.settings("solve"))
        t, m = max_error_evolution(err)
        out[level] = float(m.max())
        peak_frac[level] = float(t[np.argmax(m)] / t[-1])
    return out, peak_frac


@functools.lru_cache(maxsize=None)
def studies(preset):
    cfg = config(preset, N_ref=1024)
    st = cfg.settings("convergence")
    return {level: convergence_study(cfg.spec, level, N_LIST, settings=st) for level in Level}


def fmt(a):
    return "[" + ", ".join(f"{x:.3g}" for x in a) + "]"


# -- criteria -----------------------------------------------------------------

def criterion_1():
    checks, parts = [], []
    for preset, a0, a1 in (("burgers_paper", 0.7071068, -4.1444), ("rd_cubic_paper", -0.7071068, 4.62715)):
        rep = cmd_compat(config(preset), io.StringIO())
        left, right = rep["left"], rep["right"]
        checks += [abs(left["alpha0"] - a0) <= 1e-6, abs(left["alpha1"] - a1) <= 1e-3,
                   abs(right["alpha0"]) <= 1e-10, abs(right["alpha1"]) <= 1e-10]
        parts.append(f"{preset}: a0={left['alpha0']:.7f} a1={left['alpha1']:.5f} "
                     f"right=({right['alpha0']:.1e}, {right['alpha1']:.1e})")
    return all(checks), "; ".join(parts)


def _heat_residual(f, x, t, d=1e-4):
    ft = (-f(x, t + 2 * d) + 8 * f(x, t + d) - 8 * f(x, t - d) + f(x, t - 2 * d)) / (12 * d)
    fxx = (-f(x + 2 * d, t) + 16 * f(x + d, t) - 30 * f(x, t) + 16 * f(x - d, t) - f(x - 2 * d, t)) / (12 * d * d)
    return np.max(np.abs(ft - NU * fxx) / np.maximum(1.0, np.abs(ft)))


def criterion_2():
    X, T = np.meshgrid(np.round(np.arange(1, 20) * 0.05, 12), np.round(np.arange(1, 11) * 0.005, 12))
    r0 = _heat_residual(lambda x, t: s0(x, t, NU), X, T)
    r1 = _heat_residual(lambda x, t: s1(x, t, NU), X, T)
    gate = validate_s1_closed_form(NU)
    worst_q = 0.0
    for x in X[0, ::2]:
        for t in T[::3, 0]:
            ref, _ = quad(lambda s: 2 * s * s0(x, s * s, NU), 0, math.sqrt(t), epsabs=1e-13, limit=200)
            worst_q = max(worst_q, abs(s1(x, t, NU) - ref))
    tt = np.linspace(1e-4, 1.0, 200)
    tr0 = np.max(np.abs(s0(0.0, tt, NU) - 1.0))
    tr1 = np.max(np.abs(s1(0.0, tt, NU) - tt))
    ok = r0 <= 1e-4 and r1 <= 1e-4 and gate <= 1e-8 and worst_q <= 1e-8 and tr0 <= 1e-12 and tr1 <= 1e-12
    return ok, (f"residual S0 {r0:.1e}, S1 {r1:.1e} (<=1e-4); S1 vs quad {max(gate, worst_q):.1e} (<=1e-8); "
                f"traces {tr0:.0e}, {tr1:.0e}")


def criterion_3():
    start = time.perf_counter()
    cfg = config("heat_sine")
    errs = []
    for n, dt in ((64, 1e-4), (128, 2.5e-5)):
        h = integrate(cfg.spec, Level.NONE, UniformMesh(n), TimeGrid(dt, 0.1))
        exact = np.exp(-NU * np.pi**2 * h.times)[:, None] * np.sin(np.pi * h.x)[None, :]
        errs.append(float(np.max(np.abs(h.u - exact))))
    elapsed = time.perf_counter() - start
    ratio = errs[0] / errs[1]
    ok = errs[0] <= 1e-3 and 3.4 <= ratio <= 4.6 and elapsed < 30
    return ok, f"N=64 error {errs[0]:.3e} (<=1e-3), halving ratio {ratio:.3f} (in [3.4, 4.6]), {elapsed:.1f}s"


def _c4(preset):
    start = time.perf_counter()
    m, frac = solve_max_errors(preset)
    elapsed = time.perf_counter() - start
    r = m[Level.C1] / m[Level.NONE]
    return r <= 0.1 and elapsed < 120, (f"{preset}: C1/None = {r:.4f} (<=0.1); None {m[Level.NONE]:.3e}, "
                                        f"C1 {m[Level.C1]:.3e}; None peak at {frac[Level.NONE]:.0%} of T; "
                                        f"{elapsed:.0f}s")


def _c5(preset):
    m, _ = solve_max_errors(preset)
    r = m[Level.C2] / m[Level.C1]
    return r <= 0.8, f"{preset}: C2/C1 = {r:.3f} (<=0.8); C2 {m[Level.C2]:.3e}"


def _c6(preset):
    tabs = studies(preset)
    orders = {lv: tabs[lv].order_final_time for lv in Level}
    n, c1, c2 = (tabs[lv].err_final_time for lv in Level)
    ok = all(1.7 <= p <= 2.3 for p in orders.values()) and np.all(c1 < n) and np.all(c2 < c1)
    return ok, (f"{preset}: final orders None {orders[Level.NONE]:.2f}, C1 {orders[Level.C1]:.2f}, "
                f"C2 {orders[Level.C2]:.2f} (in [1.7, 2.3]); errors None {fmt(n)} C1 {fmt(c1)} C2 {fmt(c2)}")


def _c7(preset):
    tabs = studies(preset)
    p0, p1 = tabs[Level.NONE].order_initial_step, tabs[Level.C1].order_initial_step
    e1, e2 = tabs[Level.C1].err_initial_step, tabs[Level.C2].err_initial_step
    ok = -0.3 <= p0 <= 0.3 and 0.7 <= p1 <= 1.3 and np.all(e2 <= e1)
    return ok, (f"{preset}: initial-step orders None {p0:.2f} (in [-0.3, 0.3]), C1 {p1:.2f} (in [0.7, 1.3]); "
                f"C2/C1 {fmt(e2 / e1)} (<=1)")


def criterion_4():
    return _c4("burgers_paper")


def criterion_5():
    return _c5("burgers_paper")


def criterion_6():
    return _c6("burgers_paper")


def criterion_7():
    return _c7("burgers_paper")


def criterion_8():
    preset = "rd_cubic_paper"
    subs = [_c4(preset), _c5(preset), _c6(preset), _c7(preset)]
    tabs = studies(preset)
    n, c1, c2 = (tabs[lv].err_final_time for lv in Level)
    gap = bool(np.all(c1 <= n / 3) and np.all(c2 <= 0.85 * c1))
    subs.append((gap, f"final C1/None {fmt(c1 / n)} (<=1/3), C2/C1 {fmt(c2 / c1)} (<=0.85)"))
    tags = ("4", "5", "6", "7", "gap")
    return all(ok for ok, _ in subs), " | ".join(f"[{t} {'ok' if ok else 'FAIL'}] {d}" for t, (ok, d) in zip(tags, subs))


def criterion_9():
    start = time.perf_counter()
    checks = {}
    bnd = rec = 0.0
    for preset in ("burgers_paper", "rd_cubic_paper"):
        cfg = config(preset)
        spec = cfg.spec
        mesh = UniformMesh(32)
        for level in Level:
            h = integrate(spec, level, mesh, TimeGrid.from_factor(mesh, spec.T, 0.5))
            for k, t in enumerate(h.times[1:], 1):
                v0, vN = apply_boundary(spec, h.correction, t)[:2]
                bnd = max(bnd, abs(h.v[k, 0] - v0), abs(h.v[k, -1] - vN))
                rec = max(rec, np.max(np.abs(h.u[k] - h.v[k] - s_eval(h.correction, h.x, t, NU))))
        for level in (Level.C1, Level.C2):
            c = build_correction(spec, level)
            checks[f"zeroth-order removal {preset} {level.value}"] = abs(
                spec.g1.value(0.0) - s_boundary_trace(c, 0.0, 0.0, NU) - spec.h.value(0.0)) <= 1e-12
        c = build_correction(spec, Level.C2)
        h0, h1, h2 = spec.h.value(0.0), spec.h.d1(0.0), spec.h.d2(0.0)
        target = -h0 * h1 + NU * h2 if preset == "burgers_paper" else NU * h2 - spec.p(h0)
        checks[f"first-order removal {preset}"] = abs(spec.g1.d1(0.0) - c.alpha1 - target) <= 1e-9
        for level in Level:
            r = build_correction(spec, level, Side.RIGHT)
            l = build_correction(spec.mirrored(), level, Side.LEFT)
            checks[f"mirror involution {preset} {level.value}"] = (r.alpha0, r.alpha1) == (l.alpha0, l.alpha1)
        checks[f"mirror data {preset}"] = abs(alpha1(spec.mirrored().mirrored()) - alpha1(spec)) <= 1e-12
    checks["boundary exactness"] = bnd <= 1e-12
    checks["reconstruction identity"] = rec <= 1e-12
    m4 = UniformMesh(4)
    M, K, C = assemble_mass(m4), assemble_stiffness(m4), assemble_convection_skew(m4)
    dx = 0.25
    const = max(np.max(np.abs(M.diag[1:-1] - 2 * dx / 3)), np.max(np.abs(M.lower[1:] - dx / 6)),
                abs(M.diag[0] - dx / 3), np.max(np.abs(K.diag[1:-1] - 2 / dx)), np.max(np.abs(K.lower[1:] + 1 / dx)),
                abs(K.diag[0] - 1 / dx), np.max(np.abs(C.lower[1:-1] - 0.5)), np.max(np.abs(C.upper[1:-1] + 0.5)),
                np.max(np.abs(C.diag[1:-1])))
    checks["assembly constants"] = const <= 1e-14
    with tempfile.TemporaryDirectory() as tmp:
        text = "preset = burgers_paper\nlevel = c2\nN = 32\nN_ref = 128\nout_dir = {}"
        for name in ("a", "b"):
            cmd_solve(parse_config(text.format(Path(tmp) / name)), io.StringIO())
        checks["determinism"] = all((Path(tmp) / "a" / f).read_bytes() == (Path(tmp) / "b" / f).read_bytes()
                                    for f in ("solution.csv", "error_field.csv", "max_error.csv"))
    elapsed = time.perf_counter() - start
    checks["runtime < 10 s"] = elapsed < 10
    failed = [k for k, ok in checks.items() if not ok]
    return not failed, (f"{len(checks) - len(failed)}/{len(checks)} checks; boundary {bnd:.0e}, "
                        f"reconstruction {rec:.0e}, constants {const:.0e}; {elapsed:.1f}s"
                        + (f"; failed: {', '.join(failed)}" if failed else ""))


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 10)}


def run(i):
    ok, detail = CRITERIA[i]()
    line = f"criterion {i}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[i] = (ok, line)
    print(line)
    return ok, line


@pytest.mark.parametrize("i", list(CRITERIA))
def test_criterion(i):
    ok, line = run(i)
    assert ok, line


if __name__ == "__main__":
    results = [run(i)[0] for i in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
