"""Command-line driver: parameter scans and verification tables.

Every command accepts ``--config`` (JSON with ``schema_version``), ``--out``,
``--format csv|json``, ``--threads``, ``--tol`` and ``--figure``.  Tables are
CSV with unit annotations in the headers (internal units hbar = m = a = 1);
scalar summaries are JSON.  Grid points are evaluated in a thread pool and
written back in grid order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .errors import CrystalBECError
from .kernels import SCHEMA_VERSION, ThermoPoint, load_kernels

COMMANDS = ("integrals-check", "bifurcation-scan", "condensate-solve", "mathieu-verify",
            "landau-phase", "planewave-band", "acceptance")

DEFAULT_KERNEL = {"schema_version": SCHEMA_VERSION, "kind": "demo", "depth": 0.5, "width": 0.5}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


class NumericalFailure(RuntimeError):
    def __init__(self, where: str, exc: Exception):
        super().__init__(f"{where}: {type(exc).__name__}: {exc}")


# --- configuration -------------------------------------------------------------------

def _grid(spec: Any, name: str) -> list[float]:
    """A grid from a list of values or {"min", "max", "count"[, "log"]}."""
    where = f"grid.{name}"
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [float(spec)]
    if isinstance(spec, list):
        if not spec:
            raise ConfigError(f"{where}: empty grid")
        try:
            return [float(v) for v in spec]
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: values must be numbers") from None
    if isinstance(spec, dict):
        try:
            lo, hi, n = float(spec["min"]), float(spec["max"]), int(spec["count"])
        except KeyError as e:
            raise ConfigError(f"{where}: missing key {e.args[0]!r}") from None
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: min/max must be numbers and count an integer") from None
        if n < 1:
            raise ConfigError(f"{where}.count: must be >= 1, got {n}")
        if lo > hi:
            raise ConfigError(f"{where}: min {lo} exceeds max {hi}")
        if spec.get("log", False):
            if lo <= 0:
                raise ConfigError(f"{where}: log grid needs min > 0")
            return [float(v) for v in np.geomspace(lo, hi, n)]
        return [float(v) for v in np.linspace(lo, hi, n)]
    raise ConfigError(f"{where}: expected a number, a list or a {{min, max, count}} object")


@dataclass
class RunConfig:
    command: str
    kernel: dict = field(default_factory=lambda: dict(DEFAULT_KERNEL))
    grid: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    tol: float = 1e-6
    out: str | None = None
    fmt: str = "csv"
    threads: int = 1
    figure: str | None = None

    def axis(self, name: str, default) -> list[float]:
        return _grid(self.grid.get(name, default), name)

    def param(self, name: str, default):
        v = self.params.get(name, default)
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            try:
                return type(default)(v)
            except (TypeError, ValueError):
                raise ConfigError(f"params.{name}: expected a number, got {v!r}") from None
        return v


def load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"--config: file {path!r} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"--config: line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: expected {SCHEMA_VERSION}, got {data.get('schema_version')!r}")
    if "command" in data and data["command"] != command:
        raise ConfigError(f"config.command: file is for {data['command']!r}, not {command!r}")
    unknown = set(data) - {"schema_version", "command", "kernel", "grid", "params", "tol"}
    if unknown:
        raise ConfigError(f"config: unknown field(s) {', '.join(sorted(unknown))}")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    data = load_config(args.config, args.command)
    cfg = RunConfig(command=args.command,
                    kernel=data.get("kernel", dict(DEFAULT_KERNEL)),
                    grid=data.get("grid", {}), params=data.get("params", {}),
                    tol=float(data.get("tol", 1e-6)))
    for name in ("grid", "params", "kernel"):
        if not isinstance(getattr(cfg, name), dict):
            raise ConfigError(f"config.{name}: expected an object")
    if getattr(args, "chi", None) is not None:
        cfg.grid["chi"] = args.chi
    if args.tol is not None:
        cfg.tol = args.tol
    if not cfg.tol > 0:
        raise ConfigError(f"--tol: must be > 0, got {cfg.tol}")
    if args.threads < 1:
        raise ConfigError(f"--threads: must be >= 1, got {args.threads}")
    cfg.out, cfg.fmt, cfg.threads, cfg.figure = args.out, args.format, args.threads, args.figure
    return cfg


# --- helpers ---------------------------------------------------------------------------

def _kernels(cfg: RunConfig):
    try:
        return load_kernels(cfg.kernel)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"kernel: {e}") from None


def _pmap(fn: Callable, items: Sequence, threads: int, where: str) -> list:
    def safe(x):
        try:
            return fn(x)
        except (CrystalBECError, ArithmeticError, ValueError) as e:
            raise NumericalFailure(where, e) from e
    if threads == 1:
        return [safe(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(safe, items))     # map preserves input order


@dataclass
class Result:
    rows: list[dict]
    summary: dict
    columns: list[str]
    figure: tuple[str, list[str], bool, str | None] | None = None   # (x, ys, logy, group)
    ok: bool = True


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)      # shortest round-trip form
    return str(v)


def emit(res: Result, cfg: RunConfig, stream) -> None:
    if cfg.fmt == "json":
        text = json.dumps({"command": cfg.command, "summary": res.summary, "rows": res.rows},
                          indent=2, sort_keys=False, default=float) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(res.columns)
        for r in res.rows:
            w.writerow([_fmt(r[c.split(" [")[0]]) for c in res.columns])
        text = buf.getvalue()
    if cfg.out:
        Path(cfg.out).write_text(text)
        if cfg.fmt == "csv" and res.summary:
            Path(cfg.out).with_suffix(".summary.json").write_text(json.dumps(res.summary, indent=2) + "\n")
    else:
        stream.write(text)
        if cfg.fmt == "csv" and res.summary:
            stream.write("# " + json.dumps(res.summary) + "\n")
    if cfg.figure and res.figure:
        from .plotting import render
        x, ys, logy, group = res.figure
        render(res.rows, x, ys, cfg.figure, title=cfg.command, logy=logy, group=group)


# --- commands ---------------------------------------------------------------------------

def cmd_integrals_check(cfg: RunConfig) -> Result:
    from . import residue_integrals as ri
    betas = cfg.axis("beta", [0.25, 0.5, 1.0, 2.0, 4.0])
    rs0 = cfg.param("rho0_sigma0", 0.3)
    if any(b <= 0 for b in betas):
        raise ConfigError("grid.beta: values must be > 0")
    jobs = [(b, name) for b in betas for name in ri.SHIFT_SETS]

    def one(job):
        b, name = job
        ctx = ri.IntegralContext.from_beta(b, rs0)
        closed = ri.closed_forms(ctx)[name]
        oracle = ri.In_oracle(ri.SHIFT_SETS[name], ctx)
        return {"beta": b, "integral": name, "closed_form": closed, "oracle": oracle,
                "rel_error": abs(closed / oracle - 1.0)}
    rows = _pmap(one, jobs, cfg.threads, "residue_integrals.In_oracle")
    worst = max(r["rel_error"] for r in rows)
    return Result(rows, {"max_rel_error": worst, "tol": cfg.tol, "pass": worst <= cfg.tol},
                  ["beta [1]", "integral", "closed_form [internal]", "oracle [internal]", "rel_error [1]"],
                  ("beta", ["rel_error"], True, "integral"), ok=worst <= cfg.tol)


def cmd_bifurcation_scan(cfg: RunConfig) -> Result:
    from . import bifurcation_ordinary as bif
    rho0 = cfg.param("rho0", 1.0)
    if not rho0 > 0:
        raise ConfigError("params.rho0: must be > 0")
    taus = cfg.axis("tau", {"min": 0.01, "max": 2.0, "count": 200, "log": True})
    kern = _kernels(cfg)
    s = kern.sigma_a(1.0)

    def one(t):
        return {"tau": t, "B0I1": bif.B0I1(t, rho0), "sigma_a_B0I1": s * bif.B0I1(t, rho0)}
    rows = _pmap(one, taus, cfg.threads, "bifurcation_ordinary.B0I1")
    t_min, v_min = bif.minimize_B0I1(rho0)
    rows.append({"tau": t_min, "B0I1": v_min, "sigma_a_B0I1": s * v_min, "row": "minimum"})
    for r in rows:
        r.setdefault("row", "grid")
    summary = {"tau_min": t_min, "B0I1_min": v_min, "threshold": 1.0 / abs(v_min),
               "sigma_a": s, "rho0": rho0}
    try:
        summary["tau_star"] = bif.bifurcation_point(kern, rho0).tau_star
    except CrystalBECError as e:
        summary["tau_star"] = None
        summary["note"] = str(e)
    return Result(rows, summary, ["row", "tau [hbar^2 a^2/m]", "B0I1 [rho0 m/(hbar a)^2]", "sigma_a_B0I1 [1]"],
                  ("tau", ["B0I1"], False, None))


def cmd_condensate_solve(cfg: RunConfig) -> Result:
    from . import condensate_solver as cond
    rho0 = cfg.param("rho0", 1.0)
    taus = cfg.axis("tau", [0.2, 0.3])
    fracs = cfg.axis("rho_c_fraction", [0.0, 0.1, 0.2])
    if any(not 0 <= f <= 1 for f in fracs):
        raise ConfigError("grid.rho_c_fraction: values must lie in [0, 1]")
    kern = _kernels(cfg)
    jobs = [(t, f) for t in taus for f in fracs]

    def one(job):
        t, f = job
        tp = ThermoPoint(theta=t, rho0=rho0, tau=t, rho_c=f * rho0)
        st = cond.solve_condensate(tp, kern, tol=min(cfg.tol, 1e-10))
        rep = cond.thermo_report(tp, st, kern)
        return {"tau": t, "rho_c": tp.rho_c, "alpha1_c": st.split.alpha1_c, "alpha1_n": st.split.alpha1_n,
                "q": st.split.q_param, "energy": rep.energy_density, "pressure": rep.pressure,
                "Q": rep.Q_value, "virial_residual": 2 * rep.energy_density - 3 * rep.pressure - rep.Q_value}
    rows = _pmap(one, jobs, cfg.threads, "condensate_solver.solve_condensate")
    return Result(rows, {"rho0": rho0, "points": len(rows)},
                  ["tau [hbar^2 a^2/m]", "rho_c [1/a^3]", "alpha1_c [1/a^3]", "alpha1_n [1/a^3]", "q [1]",
                   "energy [internal energy/volume]", "pressure [internal]", "Q [internal]",
                   "virial_residual [internal]"],
                  ("rho_c", ["alpha1_c", "alpha1_n"], False, "tau"))


def cmd_mathieu_verify(cfg: RunConfig) -> Result:
    from . import mathieu_asym as ma
    chis = cfg.axis("chi", [2.0, 3.0, 4.0])
    if any(c < ma.CHI_MIN for c in chis):
        raise ConfigError(f"grid.chi: values must be >= {ma.CHI_MIN}")
    order = cfg.param("order", 6)

    def one(chi):
        r = ma.oracle_comparison(chi, order)
        return {"chi": chi,
                "c_series": r.four_c_series / 4.0, "c_oracle": r.a0_oracle / 4.0,
                "c_abs_error": r.c_error / 4.0,
                "C0_series": math.sqrt(r.C0_sq_series), "C0_oracle": math.sqrt(r.C0_sq_oracle),
                "C0_rel_error": abs(math.sqrt(r.C0_sq_series / r.C0_sq_oracle) - 1.0),
                "a1_series": r.a1_series, "a1_oracle": r.a1_oracle,
                "a1_abs_error": abs(r.a1_series - r.a1_oracle)}
    rows = _pmap(one, chis, cfg.threads, "mathieu_asym.oracle_comparison")
    return Result(rows, {"order": order},
                  ["chi [1]", "c_series [1]", "c_oracle [1]", "c_abs_error [1]", "C0_series [1]",
                   "C0_oracle [1]", "C0_rel_error [1]", "a1_series [1]", "a1_oracle [1]", "a1_abs_error [1]"],
                  ("chi", ["c_abs_error", "C0_rel_error", "a1_abs_error"], True, None))


def cmd_landau_phase(cfg: RunConfig) -> Result:
    from . import landau
    a0s = cfg.axis("alpha0", {"min": -1.0, "max": 1.0, "count": 5})
    a1s = cfg.axis("alpha1", [-1.0, 0.0, 1.0])
    a2 = cfg.param("alpha2", 0.5)
    bq = cfg.param("beta_q", 1.0)
    try:
        landau.LandauParams(0.0, 0.0, a2, bq)
    except ValueError as e:
        raise ConfigError(f"params: {e}") from None
    jobs = [(x, y) for y in a1s for x in a0s]

    def one(job):
        p = landau.LandauParams(job[0], job[1], a2, bq)
        c = landau.classify(p)
        m = landau.minimize_over_eta_p0(p)
        return {"alpha0": job[0], "alpha1": job[1], "scenario": c.scenario.value,
                "alpha_tilde": c.alpha_tilde, "eta_sq": m.eta_sq, "p0_sq": m.p0_sq, "dF": m.dF,
                "superfluid": m.superfluid}
    rows = _pmap(one, jobs, cfg.threads, "landau.minimize_over_eta_p0")
    return Result(rows, {"alpha2": a2, "beta_q": bq},
                  ["alpha0 [energy]", "alpha1 [energy/p^2]", "scenario", "alpha_tilde [energy]",
                   "eta_sq [density]", "p0_sq [(hbar a)^2]", "dF [energy]", "superfluid"],
                  ("alpha0", ["dF"], False, "alpha1"))


def cmd_planewave_band(cfg: RunConfig) -> Result:
    from . import bifurcation_ordinary as bif
    from . import planewave_band as pw
    ps = cfg.axis("p", {"min": 0.0, "max": 2.0, "count": 21})
    alpha = cfg.param("alpha", 0.1)
    sigma_a = cfg.param("sigma_a", -0.5)
    rs0 = cfg.param("rho0_sigma0", 0.3)
    cutoff = cfg.param("cutoff", 3)
    if cutoff < 2:
        raise ConfigError("params.cutoff: must be >= 2")
    U = pw.first_shell_potential_3d(rs0, alpha, sigma_a)

    def one(p):
        try:
            bp = pw.solve_band_full(U, (p, 0.0, 0.0), cutoff)
            flag = ""
        except CrystalBECError as e:     # degenerate branch: report the row, flag it
            bp = pw.solve_band_full(U, (p, 0.0, 0.0), cutoff, check_degenerate=False)
            flag = type(e).__name__
        return {"p": p, "eps0": bp.eps0, "psi0": bp.psi0, "free": rs0 + 0.5 * p * p, "flag": flag}
    rows = _pmap(one, ps, cfg.threads, "planewave_band.solve_band")
    summary = {"alpha": alpha, "sigma_a": sigma_a, "rho0_sigma0": rs0, "cutoff": cutoff}
    tau = cfg.params.get("tau")
    if tau is not None:
        tau = float(tau)
        K = pw.separable_kinetic(pw.first_shell_potential_1d(rs0, alpha, sigma_a), tau, 1.0)
        summary.update({"tau": tau, "kinetic_planewave": K,
                        "kinetic_second_order": bif.kinetic_from(tau, 1.0, sigma_a, alpha * alpha)})
    return Result(rows, summary, ["p [hbar a]", "eps0 [hbar^2 a^2/m]", "psi0 [1]", "free [hbar^2 a^2/m]", "flag"],
                  ("p", ["eps0", "free"], False, None))


def cmd_acceptance(cfg: RunConfig) -> Result:
    from . import acceptance
    select = cfg.params.get("criteria")
    results = acceptance.run_all(set(select) if select else None)
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail,
             "seconds": round(r.elapsed, 3)} for r in results]
    ok = all(r.passed for r in results)
    return Result(rows, {"passed": sum(r.passed for r in results), "total": len(results)},
                  ["criterion", "name", "passed", "detail", "seconds [s]"], None, ok=ok)


HANDLERS = {
    "integrals-check": cmd_integrals_check,
    "bifurcation-scan": cmd_bifurcation_scan,
    "condensate-solve": cmd_condensate_solve,
    "mathieu-verify": cmd_mathieu_verify,
    "landau-phase": cmd_landau_phase,
    "planewave-band": cmd_planewave_band,
    "acceptance": cmd_acceptance,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crystalbec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration with schema_version")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--tol", type=float, default=None, help="relative tolerance")
        sp.add_argument("--figure", help="also render a PNG figure to this path")
        if name == "mathieu-verify":
            sp.add_argument("--chi", type=float, nargs="+", help="chi values (overrides grid.chi)")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        res = HANDLERS[cfg.command](cfg)
        emit(res, cfg, sys.stdout)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericalFailure as e:
        print(f"numerical failure in {e}", file=sys.stderr)
        return 3
    except CrystalBECError as e:
        print(f"numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    return 0 if res.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
