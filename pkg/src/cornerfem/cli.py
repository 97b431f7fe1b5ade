"""Command-line experiment runner.

Usage::

    cornerfem compat CONFIG
    cornerfem solve CONFIG
    cornerfem convergence CONFIG

CONFIG is a ``key = value`` file (``#`` starts a comment). Exit codes: 0 on
success, 2 for configuration errors, 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import (
    IncompatibleGridsError,
    RunSettings,
    convergence_study,
    default_settings,
    max_error_evolution,
    run_with_reference,
)
from .problem import (
    COMPAT_TOL,
    PRESETS,
    Kind,
    Level,
    ProblemSpec,
    ReactionPolynomial,
    Side,
    UnsupportedConfigurationError,
    alpha0,
    alpha1,
    polynomial_signal,
    sine_profile,
)
from .timestep import DivergenceError, StepSizeError

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "cmd_compat",
    "cmd_convergence",
    "cmd_solve",
    "main",
    "parse_config",
]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# keys describing a problem explicitly; mutually exclusive with ``preset``
PROBLEM_KEYS = ("kind", "nu", "T", "h", "g1", "g2", "p")
KNOWN_KEYS = PROBLEM_KEYS + (
    "preset", "level", "N", "N_list", "N_ref", "dt_factor", "dt_power", "scheme", "theta",
    "quad_points", "reference_correction", "t_off", "side", "workers", "out_dir",
)
KINDS = {"burgers": Kind.BURGERS, "rd": Kind.REACTION_DIFFUSION, "reaction_diffusion": Kind.REACTION_DIFFUSION}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment configuration.

    Discretization fields left as None fall back to the step policy of the
    preset (see ``analysis.default_settings``) or to the generic defaults.
    """

    spec: ProblemSpec
    preset: str | None = None
    level: Level = Level.NONE
    N: int = 128
    N_list: tuple[int, ...] = (32, 64, 128, 256)
    N_ref: int = 1024
    dt_factor: float | None = None
    dt_power: int | None = None
    scheme: str | None = None
    theta: float | None = None
    quad_points: int | None = None
    reference_correction: str = "same"
    t_off: float | None = None
    side: Side = Side.BOTH
    workers: int = 1
    out_dir: Path = Path(".")

    def settings(self, purpose: str) -> RunSettings:
        base = default_settings(self.preset, purpose)
        kw = {}
        if self.dt_factor is not None or self.dt_power is not None:
            kw["dt_factor"] = 0.25 if self.dt_factor is None else self.dt_factor
            kw["dt_power"] = 1 if self.dt_power is None else self.dt_power
        if self.scheme is not None:
            kw["scheme"] = self.scheme
        elif self.theta is not None:
            kw["scheme"] = "theta"
        if self.theta is not None:
            kw["theta"] = self.theta
        if self.quad_points is not None:
            kw["quad_points"] = self.quad_points
        ref_level = Level.C2 if self.reference_correction == "pinned" else None
        return replace(base, side=self.side, t_off=self.t_off, n_ref=self.N_ref, reference_level=ref_level, **kw)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(a) for a in text.split(","))


def _positive(key: str, value, integer: bool = False):
    if integer and int(value) != value:
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if not value > 0:
        raise ConfigError(f"{key}: must be positive, got {value!r}")
    return int(value) if integer else value


def _read_pairs(text: str) -> dict[str, tuple[str, int]]:
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        pairs[key] = (value, lineno)
    return pairs


def _build_spec(get, pairs) -> tuple[ProblemSpec, str | None]:
    explicit = [k for k in PROBLEM_KEYS if k in pairs]
    if "preset" in pairs:
        if explicit:
            raise ConfigError(f"{explicit[0]}: cannot be combined with preset")
        name = get("preset", str)
        if name not in PRESETS:
            raise ConfigError(f"preset: unknown preset {name!r} (choose from {', '.join(sorted(PRESETS))})")
        return PRESETS[name](), name
    if not explicit:
        raise ConfigError("preset: either a preset or an explicit problem (kind, nu, T, h, ...) is required")
    for k in ("kind", "nu", "T", "h"):
        if k not in pairs:
            raise ConfigError(f"{k}: required for an explicit problem")
    kind_name = get("kind", str).lower()
    if kind_name not in KINDS:
        raise ConfigError(f"kind: expected burgers or rd, got {kind_name!r}")
    kind = KINDS[kind_name]
    nu = _positive("nu", get("nu", float))
    T = _positive("T", get("T", float))
    h = get("h", _floats)
    if len(h) != 3:
        raise ConfigError("h: expected 'a, b, c' for a*sin(b*pi*x + c*pi)")
    p = None
    if kind is Kind.REACTION_DIFFUSION:
        if "p" not in pairs:
            raise ConfigError("p: reaction-diffusion needs polynomial coefficients")
        p = get("p", lambda s: ReactionPolynomial(_floats(s)))
    elif "p" in pairs:
        raise ConfigError("p: only valid for reaction-diffusion")
    g1 = get("g1", lambda s: polynomial_signal(_floats(s))) if "g1" in pairs else polynomial_signal()
    g2 = get("g2", lambda s: polynomial_signal(_floats(s))) if "g2" in pairs else polynomial_signal()
    try:
        spec = ProblemSpec(kind=kind, nu=nu, g1=g1, g2=g2, h=sine_profile(*h), T=T, p=p)
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from exc
    return spec, None


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate ``key = value`` configuration text."""
    pairs = _read_pairs(text)

    def get(key, conv):
        value, lineno = pairs[key]
        try:
            return conv(value)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc

    spec, preset = _build_spec(get, pairs)
    kw: dict = {"spec": spec, "preset": preset}
    if "level" in pairs:
        kw["level"] = get("level", lambda s: Level(s.lower()))
    if "N" in pairs:
        kw["N"] = _positive("N", get("N", int), True)
    if "N_list" in pairs:
        ns = get("N_list", lambda s: tuple(int(a) for a in s.split(",")))
        for n in ns:
            _positive("N_list", n, True)
        if len(ns) < 3 or len(set(ns)) != len(ns):
            raise ConfigError("N_list: need at least 3 distinct mesh sizes")
        kw["N_list"] = tuple(sorted(ns))
    if "N_ref" in pairs:
        kw["N_ref"] = _positive("N_ref", get("N_ref", int), True)
    for key in ("dt_factor", "theta", "t_off"):
        if key in pairs:
            kw[key] = _positive(key, get(key, float))
    if "theta" in kw and kw["theta"] > 1:
        raise ConfigError("theta: must lie in (0, 1]")
    for key in ("dt_power", "quad_points", "workers"):
        if key in pairs:
            kw[key] = _positive(key, get(key, int), True)
    if kw.get("quad_points", 2) < 2:
        raise ConfigError("quad_points: need at least 2")
    if "scheme" in pairs:
        kw["scheme"] = get("scheme", str.lower)
        if kw["scheme"] not in ("theta", "sbdf2"):
            raise ConfigError("scheme: expected theta or sbdf2")
    if "reference_correction" in pairs:
        kw["reference_correction"] = get("reference_correction", str.lower)
        if kw["reference_correction"] not in ("same", "pinned"):
            raise ConfigError("reference_correction: expected same or pinned")
    if "side" in pairs:
        kw["side"] = get("side", lambda s: Side(s.lower()))
    if "out_dir" in pairs:
        kw["out_dir"] = Path(get("out_dir", str))
    cfg = ExperimentConfig(**kw)
    for n in (cfg.N,) + cfg.N_list:
        if n < 4:
            raise ConfigError(f"N: meshes need at least 4 segments, got {n}")
    # only sizes the user set are checked here; commands re-check what they use
    given = ([cfg.N] if "N" in pairs else []) + (list(cfg.N_list) if "N_list" in pairs else [])
    bad = [n for n in given if cfg.N_ref % n]
    if bad:
        raise ConfigError(f"N_ref: {cfg.N_ref} is not a multiple of {bad[0]}")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


# -- output ------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    # repr of a Python float is the shortest string that round-trips
    return repr(float(x))


def write_csv(path: Path, header: tuple[str, ...], columns, footer: tuple[str, ...] = ()) -> Path:
    cols = [np.asarray(c).ravel() for c in columns]
    lines = [",".join(header)]
    lines += [",".join(_fmt(c[i]) for c in cols) for i in range(len(cols[0]))]
    lines += [f"# {f}" for f in footer]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Header and float data of a CSV written by this module (comment rows skipped)."""
    rows = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    header = rows[0].split(",")
    data = np.array([[float(a) for a in r.split(",")] for r in rows[1:]])
    return header, data.reshape(-1, len(header))


# -- commands ----------------------------------------------------------------

def _corner_defects(spec: ProblemSpec) -> dict[str, tuple[float, float]]:
    mirror = spec.mirrored()
    return {"left": (alpha0(spec), alpha1(spec)), "right": (alpha0(mirror), alpha1(mirror))}


def cmd_compat(cfg: ExperimentConfig, out=None) -> dict[str, dict]:
    """Report alpha0, alpha1 at both corners and which orders are violated."""
    out = out or sys.stdout
    report = {}
    for corner, (a0, a1) in _corner_defects(cfg.spec).items():
        violated = [order for order, a in ((0, a0), (1, a1)) if abs(a) > COMPAT_TOL]
        report[corner] = {"alpha0": a0, "alpha1": a1, "violated": violated}
        flags = ", ".join(f"order {k}" for k in violated) or "compatible"
        print(f"{corner:5s}  alpha0 = {a0: .10g}  alpha1 = {a1: .10g}  [{flags}]", file=out)
    return report


def cmd_solve(cfg: ExperimentConfig, out=None) -> dict[str, Path]:
    """Solve at N, compare with the nested reference and write the CSV files."""
    out = out or sys.stdout
    st = cfg.settings("solve")
    coarse, _, err = run_with_reference(cfg.spec, cfg.level, cfg.N, st)
    nt, nx = coarse.u.shape
    t = np.repeat(coarse.times, nx)
    x = np.tile(coarse.x, nt)
    times, max_e = max_error_evolution(err)
    d = cfg.out_dir
    paths = {
        "solution": write_csv(d / "solution.csv", ("t", "x", "v", "u"), (t, x, coarse.v, coarse.u)),
        "error_field": write_csv(d / "error_field.csv", ("t", "x", "e"), (t, x, err.e)),
        "max_error": write_csv(d / "max_error.csv", ("t", "max_e"), (times, max_e)),
    }
    print(f"{cfg.spec.name} level={cfg.level.value} N={cfg.N} dt={coarse.meta['dt']:.6g} "
          f"scheme={st.scheme} max error={max_e.max():.6e}", file=out)
    return paths


def cmd_convergence(cfg: ExperimentConfig, out=None) -> Path:
    """Run the convergence study over N_list and write ``convergence.csv``."""
    out = out or sys.stdout
    st = cfg.settings("convergence")
    table = convergence_study(cfg.spec, cfg.level, cfg.N_list, settings=st, workers=cfg.workers)
    footer = (f"order_err_t0 = {_fmt(table.order_initial_step)}",
              f"order_err_T = {_fmt(table.order_final_time)}")
    path = write_csv(cfg.out_dir / "convergence.csv", ("N", "dx", "err_t0", "err_T"),
                     (table.N, [r.dx for r in table.rows], table.err_initial_step, table.err_final_time),
                     footer)
    for r in table.rows:
        print(f"N={r.N:5d}  err_t0={r.err_initial_step:.4e}  err_T={r.err_final_time:.4e}", file=out)
    print(f"orders: initial step {table.order_initial_step:.3f}, final time {table.order_final_time:.3f}", file=out)
    return path


COMMANDS = {"compat": cmd_compat, "solve": cmd_solve, "convergence": cmd_convergence}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="cornerfem", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="path to a key = value configuration file")
    parser.add_argument("-o", "--out-dir", help="override out_dir from the config")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out_dir:
            cfg = replace(cfg, out_dir=Path(args.out_dir))
        COMMANDS[args.command](cfg)
    except (ConfigError, UnsupportedConfigurationError, IncompatibleGridsError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, StepSizeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
