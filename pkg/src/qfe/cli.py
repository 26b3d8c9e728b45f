"""Command-line front end: ``qfe run | count | convergence | selftest``.

Exit codes: 0 ok, 1 selftest failure, 2 config error, 3 solver failure.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from qfe import __version__
from qfe.ansatz import FitError
from qfe.problems import (PROBLEMS, build_dense_ode, build_heat, build_stochastic_heat,
                          build_stochastic_ode, simulate, simulate_stochastic_heat)
from qfe.spectral import interpolation_error
from qfe.stochastic import extract_moments, pce_truncation_error
from qfe.vqs import (INTEGRATORS, MODES, STRATEGIES, SolverError, circuit_count,
                     prepare_hamiltonian)

log = logging.getLogger("qfe")

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
DEFAULT_QUBITS = {"dense-ode": 2, "stochastic-ode": 3, "heat": 3, "stochastic-heat": 3}
DEFAULT_LAYERS = {"dense-ode": 2, "stochastic-ode": 4, "heat": 4, "stochastic-heat": 4}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str
    n: int = None
    M: int = None
    L: int = None  # ansatz layers, M = n * L
    dt: float = 1e-3
    t_final: float = 1.0
    mode: str = "exact"
    strategy: str = "parallel"
    integrator: str = "euler"
    seed: int = 0
    output: str = None
    format: str = "csv"
    stride: int = 1
    kl_terms: int = 3
    quad_nodes: int = 3

    def validate(self):
        errors = []
        if self.problem not in PROBLEMS:
            errors.append(f"problem: must be one of {PROBLEMS}, got {self.problem!r}")
            raise ConfigError("; ".join(errors))
        if self.n is None:
            self.n = DEFAULT_QUBITS[self.problem]
        if self.L is None:
            self.L = self.M // self.n if self.M else DEFAULT_LAYERS[self.problem]
        if self.M is None:
            self.M = self.n * self.L
        for name in ("n", "M", "L", "seed", "stride", "kl_terms", "quad_nodes"):
            if not isinstance(getattr(self, name), int) or isinstance(getattr(self, name), bool):
                errors.append(f"{name}: expected an integer, got {getattr(self, name)!r}")
        for name in ("dt", "t_final"):
            if not isinstance(getattr(self, name), (int, float)):
                errors.append(f"{name}: expected a number, got {getattr(self, name)!r}")
        if errors:
            raise ConfigError("; ".join(errors))
        if self.problem == "dense-ode" and self.n != 2:
            errors.append("n: the dense ODE is a 2-qubit problem")
        if self.problem == "stochastic-ode" and self.n < 1:
            errors.append("n: need n >= 1 (N = 2^n chaos terms)")
        if self.problem in ("heat", "stochastic-heat") and self.n < 2:
            errors.append("n: need n >= 2 (2^n interior collocation points)")
        if self.L < 1 or self.M != self.n * self.L:
            errors.append(f"M: must equal n * L with L >= 1 (n={self.n}, M={self.M}, L={self.L})")
        if self.dt <= 0:
            errors.append("dt: must be positive")
        if self.t_final < 0:
            errors.append("t_final: must be non-negative")
        elif self.dt > 0 and abs(round(self.t_final / self.dt) * self.dt - self.t_final) > 1e-12:
            errors.append("t_final: must be an integer multiple of dt")
        if self.mode not in MODES:
            errors.append(f"mode: must be one of {MODES}")
        if self.strategy not in STRATEGIES:
            errors.append(f"strategy: must be one of {STRATEGIES}")
        if self.integrator not in INTEGRATORS:
            errors.append(f"integrator: must be one of {INTEGRATORS}")
        if self.format not in ("csv", "json"):
            errors.append("format: must be csv or json")
        if self.stride < 1:
            errors.append("stride: must be >= 1")
        if self.kl_terms < 0 or self.quad_nodes < 1:
            errors.append("kl_terms must be >= 0 and quad_nodes >= 1")
        if errors:
            raise ConfigError("; ".join(errors))
        return self


def load_config(args):
    """Merge a JSON config file with explicitly given flags (flags win)."""
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file: top level must be an object")
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config file: unknown keys {unknown}")
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            data[f.name] = value
    if "problem" not in data:
        raise ConfigError("problem: required")
    return RunConfig(**data).validate()


def thread_cap():
    raw = os.environ.get("QFE_THREADS")
    if raw is None or raw == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"QFE_THREADS: expected a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"QFE_THREADS: expected a positive integer, got {raw!r}")
    return value


def _vqs_kwargs(cfg):
    return dict(dt=cfg.dt, layers=cfg.L, mode=cfg.mode, strategy=cfg.strategy,
                integrator=cfg.integrator, seed=cfg.seed)


def _count_block(run, instance, cfg):
    if cfg.mode == "circuit":
        per_step = sorted(set(run.circuits_per_step))
        return {"counted": True, "circuits_per_step": per_step[0] if len(per_step) == 1 else per_step,
                "by_label": run.counts}
    h = prepare_hamiltonian(instance.hamiltonian, instance.pauli_drop_tol)
    parts = sum(not p.empty for p in h.split.parts)
    return {"counted": False,
            "circuits_per_step": circuit_count(cfg.M, h.num_terms, cfg.strategy, parts)}


def solve(cfg, workers=1):
    """Run one configured problem; returns ``(columns, rows, count_block)``."""
    if cfg.problem == "stochastic-heat":
        sh = build_stochastic_heat(cfg.kl_terms, cfg.quad_nodes, N=2**cfg.n + 1)
        runs = simulate_stochastic_heat(sh, cfg.t_final, workers=workers, **_vqs_kwargs(cfg))
        times = runs[0].times
        sols = np.array([r.coefficients.real for r in runs])
        mean, var = sh.recombine(sols)
        rmean, rvar = sh.recombine([inst.classical(times) for inst in sh.instances])
        sol, ref = np.hstack([mean, var]), np.hstack([rmean, rvar])
        thetas = np.array([r.thetas for r in runs]).transpose(1, 0, 2).reshape(len(times), -1)
        count = _count_block(runs[0], sh.instances[0], cfg)
        count["instances"] = len(runs)
        theta_names = [f"theta_{j}_{k}" for j in range(len(runs)) for k in range(cfg.M + 1)]
    else:
        if cfg.problem == "dense-ode":
            inst = build_dense_ode()
        elif cfg.problem == "stochastic-ode":
            inst = build_stochastic_ode(2**cfg.n)
        else:
            inst = build_heat(N=2**cfg.n + 1)
        run = simulate(inst, cfg.t_final, **_vqs_kwargs(cfg))
        times, thetas = run.times, run.thetas
        if inst.readout == "pce-moments":
            sol = []
            for th, c in zip(run.thetas, run.coefficients):
                m = extract_moments(c / th[0], th[0])
                sol.append([m.mean, m.variance])
            sol = np.array(sol)
        else:
            sol = run.coefficients.real
        ref = np.asarray(inst.reference(times))
        count = _count_block(run, inst, cfg)
        theta_names = [f"theta_{k}" for k in range(cfg.M + 1)]
    columns = (["t"] + theta_names + [f"sol_{i}" for i in range(sol.shape[1])]
               + [f"ref_{i}" for i in range(ref.shape[1])] + ["abs_err_max"])
    err = np.abs(sol - ref).max(axis=1)
    rows = np.column_stack([times, thetas, sol, ref, err])[:: cfg.stride]
    if (len(times) - 1) % cfg.stride:
        rows = np.vstack([rows, np.column_stack([times, thetas, sol, ref, err])[-1]])
    return columns, rows, count


def format_output(cfg, columns, rows, count):
    header = {"version": __version__, "config": asdict(cfg), "circuit_count": count}
    if cfg.format == "json":
        return json.dumps({**header, "columns": columns, "rows": rows.tolist()},
                          indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# qfe {__version__}\n")
    buf.write(f"# config {json.dumps(asdict(cfg), sort_keys=True)}\n")
    buf.write(f"# circuit_count {json.dumps(count, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args):
    try:
        cfg = load_config(args)
        workers = thread_cap()
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        columns, rows, count = solve(cfg, workers)
    except SolverError as exc:
        print(f"solver failure at step {exc.step}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except FitError as exc:
        print(f"solver failure: initial state fit ({exc})", file=sys.stderr)
        return EXIT_SOLVER
    _emit(format_output(cfg, columns, rows, count), cfg.output)
    return EXIT_OK


def count_report(n, M, P=None, parts=4):
    P = 4**n if P is None else P
    original = circuit_count(M, P, "original")
    parallel = circuit_count(M, P, "parallel", parts)
    return {"n": n, "M": M, "P": P, "original": original, "parallel": parallel,
            "ratio": original / parallel}


def cmd_count(args):
    if args.n < 1 or args.M < 0 or (args.P is not None and args.P < 0):
        print("config error: need n >= 1, M >= 0, P >= 0", file=sys.stderr)
        return EXIT_CONFIG
    r = count_report(args.n, args.M, args.P, args.parts)
    if args.strategy:
        print(r[args.strategy])
        return EXIT_OK
    print(f"original (M+1)^2 + P(M+1)   = {r['original']}   (n={r['n']}, M={r['M']}, P={r['P']})")
    print(f"parallel (M+1)^2 + {args.parts}(M+1) = {r['parallel']}")
    print(f"ratio original/parallel     = {r['ratio']:.4g}")
    return EXIT_OK


def _sode_variance_error(n, dt=1e-3):
    inst = build_stochastic_ode(2**n)
    run = simulate(inst, 1.0, dt=dt, layers=DEFAULT_LAYERS["stochastic-ode"] if n > 2 else 2)
    th, c = run.thetas[-1], run.coefficients[-1]
    return abs(extract_moments(c / th[0], th[0]).variance - inst.reference(1.0)[1])


def _heat_collocation_error(N, times=np.linspace(0.0, 1.0, 11)):
    """Classically integrated collocation solution on grid ``N`` vs the analytic field."""
    inst = build_heat(N=N)
    return np.abs(inst.classical(times) - inst.reference(times)).max()


SWEEPS = {
    "heat": ("N", _heat_collocation_error),
    "interp": ("points", lambda N: interpolation_error(lambda x: np.sin(np.pi * x), N)),
    "constant": ("N", lambda N: interpolation_error(lambda x: 0.7 + 0.0 * x, N)),
    "pce": ("N", lambda N: pce_truncation_error(lambda xi: np.exp(0.5 * xi), N)),
    "stochastic-ode": ("n", _sode_variance_error),
}
SWEEP_DEFAULTS = {"heat": (6, 13), "interp": (6, 13), "constant": (2, 13), "pce": (2, 8), "stochastic-ode": (2, 3)}


def convergence_table(sweep, lo=None, hi=None):
    axis, fn = SWEEPS[sweep]
    d_lo, d_hi = SWEEP_DEFAULTS[sweep]
    lo = d_lo if lo is None else lo
    hi = d_hi if hi is None else hi
    return axis, [(k, float(fn(k))) for k in range(lo, hi + 1)]


def cmd_convergence(args):
    lo, hi = args.min, args.max
    d_lo, _ = SWEEP_DEFAULTS[args.sweep]
    if (lo if lo is not None else d_lo) < 1 or (args.sweep == "heat" and lo is not None and lo < 3) or (lo is not None and hi is not None and hi < lo):
        print("config error: need 1 <= min <= max", file=sys.stderr)
        return EXIT_CONFIG
    try:
        axis, table = convergence_table(args.sweep, lo, hi)
    except (SolverError, FitError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.format == "json":
        text = json.dumps({"version": __version__, "sweep": args.sweep, "columns": [axis, "error"],
                           "rows": table}, indent=1) + "\n"
    else:
        text = f"# qfe {__version__}\n# sweep {args.sweep}\n{axis},error\n"
        text += "".join(f"{k},{e!r}\n" for k, e in table)
    _emit(text, args.output)
    return EXIT_OK


def cmd_selftest(args):
    from qfe.selftest import run_all
    checks = run_all()
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print("selftest " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_SELFTEST


def build_parser():
    parser = argparse.ArgumentParser(prog="qfe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qfe {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a benchmark problem")
    run.add_argument("problem", nargs="?", choices=PROBLEMS)
    run.add_argument("--config", help="JSON file with RunConfig fields")
    run.add_argument("--n", type=int)
    run.add_argument("--M", type=int, help="variational parameters, n * L")
    run.add_argument("--L", type=int, help="ansatz layers")
    run.add_argument("--dt", type=float)
    run.add_argument("--t-final", dest="t_final", type=float)
    run.add_argument("--mode", choices=MODES)
    run.add_argument("--strategy", choices=STRATEGIES)
    run.add_argument("--integrator", choices=INTEGRATORS)
    run.add_argument("--seed", type=int)
    run.add_argument("--output", "-o")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--stride", type=int, help="write every stride-th time step")
    run.add_argument("--kl-terms", dest="kl_terms", type=int)
    run.add_argument("--quad-nodes", dest="quad_nodes", type=int)
    run.set_defaults(func=cmd_run)

    count = sub.add_parser("count", help="circuits per time step for both strategies")
    count.add_argument("--n", type=int, required=True)
    count.add_argument("--M", type=int, required=True)
    count.add_argument("--P", type=int, help="Pauli terms (default 4^n)")
    count.add_argument("--parts", type=int, default=4, help="non-empty split parts")
    count.add_argument("--strategy", choices=STRATEGIES, help="print only this count")
    count.set_defaults(func=cmd_count)

    conv = sub.add_parser("convergence", help="error against resolution")
    conv.add_argument("sweep", choices=tuple(SWEEPS))
    conv.add_argument("--min", type=int)
    conv.add_argument("--max", type=int)
    conv.add_argument("--output", "-o")
    conv.add_argument("--format", choices=("csv", "json"), default="csv")
    conv.set_defaults(func=cmd_convergence)

    st = sub.add_parser("selftest", help="numerical hygiene checks")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
