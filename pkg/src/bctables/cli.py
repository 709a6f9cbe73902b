"""``bct`` command line: estimate, exact, approx, validate, gen, compare.

Every invocation prints one JSON document (or writes it to ``--out``).
Failures produce ``{"error": code, "message": ...}`` and a nonzero exit.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import _backend
from .core import Instance, gale_ryser_feasible, normalize, sequence_diagnostics
from .errors import BctError, MarginMismatch, ParseError, RateDegenerate
from .harness import GeneratorSpec, compare_run, generate_instance
from .mckay import mckay_estimate
from .oracle import dp_count
from .sis_engine import run_batch_arrays
from .stats import aggregate, chebyshev_plan, chernoff_plan, efficiency_report

SCHEMA_VERSION = "1"
COMMANDS = ("estimate", "exact", "approx", "validate", "gen", "compare")
PLANS = ("chebyshev", "chernoff", "fixed")
DEFAULT_PILOT = 1000
DEFAULT_REPS = 1000
# plans that would run longer than this are refused rather than started
MAX_PLANNED_REPS = 10 ** 8


class UsageError(BctError):
    code = "UsageError"


@dataclass
class RunConfig:
    command: str
    instance_path: str | None = None
    reps: int = DEFAULT_REPS
    seed: int = 0
    epsilon: float = 0.1
    delta: float = 0.05
    plan: str = "fixed"
    threads: int | str = 1
    out_path: str | None = None
    pilot: int = DEFAULT_PILOT
    backend: str | None = None
    # gen only
    m: int = 10
    r_max: int = 3
    cap_exponent: float = 0.5

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.plan not in PLANS:
            raise UsageError(f"unknown plan {self.plan!r}")
        if self.plan != "fixed":
            if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
                raise UsageError("epsilon and delta must lie in (0, 1)")
            if self.pilot < (100 if self.plan == "chernoff" else 2):
                raise UsageError(f"pilot too small for plan {self.plan}")
        if self.reps < 2 and self.command in ("estimate", "compare"):
            raise UsageError("reps must be at least 2")
        if self.seed < 0:
            raise UsageError("seed must be nonnegative")
        if self.command != "gen" and not self.instance_path:
            raise UsageError(f"{self.command} needs an instance file")

    def thread_count(self) -> int:
        if self.threads == "auto":
            return os.cpu_count() or 1
        return int(self.threads)


def _field_error(source, text, field, pos, value):
    at = text.find(f'"{field}"')
    line = f"line {text.count(chr(10), 0, at) + 1}, " if at >= 0 else ""
    return ParseError(f"{source}: {line}field {field!r}, entry {pos}: "
                      f"expected a nonnegative integer, got {value!r}")


def parse_instance_text(text: str, source: str = "<input>") -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be an object with 'rows' and 'cols'")
    values = {}
    for name in ("rows", "cols"):
        if name not in doc:
            raise ParseError(f"{source}: missing field {name!r}")
        raw = doc[name]
        if not isinstance(raw, list):
            raise ParseError(f"{source}: field {name!r} must be a list")
        for pos, v in enumerate(raw):
            # bool is an int subclass in Python; reject it explicitly
            if isinstance(v, bool) or not isinstance(v, int) or v < 0:
                raise _field_error(source, text, name, pos, v)
        values[name] = raw
    return normalize(Instance(values["rows"], values["cols"]))


def parse_instance_file(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc.reason})") from None
    return parse_instance_text(text, str(path))


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _clean(obj):
    """Replace non-finite floats with null so the document is strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    return _finite(obj)


def _empty_results():
    return {
        "log_mu_hat": None, "mu_hat_string": None, "log_u_hat": None, "cv_hat": None,
        "rel_std_err": None, "ci_log": None, "acceptance_rate": None, "reps_used": None,
        "planned_reps": None, "regime_flags": None, "fourth_moment_score": None,
    }


def _regime(instance, summary=None):
    diag = sequence_diagnostics(instance.cols)
    rep = efficiency_report(instance, summary, diag)
    return rep.flags(), diag.fourth_moment_score


def _estimate(cfg, inst, timing):
    threads = cfg.thread_count()
    backend = _backend.resolve(cfg.backend)
    approx = mckay_estimate(inst)
    t0 = time.perf_counter()
    plan_used = cfg.plan
    if cfg.plan == "fixed":
        batch = run_batch_arrays(inst, cfg.reps, cfg.seed, threads, backend)
        logs = batch.log_estimates
        planned = cfg.reps
    else:
        pilot = run_batch_arrays(inst, cfg.pilot, cfg.seed, threads, backend)
        ps = aggregate(pilot.log_estimates, approx.log_eta)
        planned = None
        if cfg.plan == "chernoff":
            normalized = np.exp(pilot.log_estimates - ps.log_mu_hat)
            try:
                planned = chernoff_plan(normalized, cfg.epsilon, cfg.delta)
            except RateDegenerate:
                plan_used = "chebyshev"
        if planned is None:
            planned = chebyshev_plan(ps.cv_hat, cfg.epsilon, cfg.delta)
        if planned > MAX_PLANNED_REPS:
            raise UsageError(f"planned {planned} replications exceeds {MAX_PLANNED_REPS}")
        logs = pilot.log_estimates
        if planned > cfg.pilot:
            rest = run_batch_arrays(inst, planned - cfg.pilot, cfg.seed, threads, backend,
                                    start=cfg.pilot)
            logs = np.concatenate([logs, rest.log_estimates])
    timing["sampling"] = 1e3 * (time.perf_counter() - t0)
    summary = aggregate(logs, approx.log_eta)
    flags, score = _regime(inst, summary)
    method = {"sampler": "sequential-importance-cp-drafting", "plan": cfg.plan,
              "plan_used": plan_used, "epsilon": cfg.epsilon, "delta": cfg.delta,
              "pilot": cfg.pilot if cfg.plan != "fixed" else None, "threads": threads,
              "backend": backend, "rng": "philox4x64-10"}
    results = _empty_results()
    results.update({
        "log_mu_hat": summary.log_mu_hat,
        "log_u_hat": summary.log_u_hat,
        "cv_hat": summary.cv_hat,
        "rel_std_err": summary.rel_std_err,
        "ci_log": [summary.ci_log_lower, summary.ci_log_upper],
        "acceptance_rate": summary.acceptance_rate,
        "reps_used": summary.reps,
        "planned_reps": planned,
        "regime_flags": flags,
        "fourth_moment_score": score,
        "chebyshev_rel_halfwidth": summary.chebyshev_rel_halfwidth,
        "log_mu_approx": approx.log_mu_approx,
    })
    return method, results


def _exact(cfg, inst, timing):
    count = dp_count(inst)
    results = _empty_results()
    flags, score = _regime(inst)
    results.update({
        "log_mu_hat": math.log(count) if count else -math.inf,
        "mu_hat_string": str(count),
        "log_u_hat": (math.log(count) - mckay_estimate(inst).log_eta) if count else -math.inf,
        "regime_flags": flags,
        "fourth_moment_score": score,
    })
    return {"oracle": "residual-class-dynamic-programming"}, results


def _approx(cfg, inst, timing):
    approx = mckay_estimate(inst)
    results = _empty_results()
    flags, score = _regime(inst)
    results.update({
        "log_mu_hat": approx.log_mu_approx,
        "log_phi": approx.log_phi,
        "alpha": approx.alpha,
        "log_u_hat": approx.log_mu_approx - approx.log_eta,
        "regime_flags": flags,
        "fourth_moment_score": score,
    })
    return {"approximation": "sparse-regime-asymptotic"}, results


def _validate_doc(cfg):
    try:
        inst = parse_instance_file(cfg.instance_path)
    except MarginMismatch as exc:
        return None, {"feasible": False, "reason": str(exc)}
    ok = gale_ryser_feasible(inst)
    return inst, {"feasible": ok,
                  "reason": None if ok else "Gale-Ryser dominance condition fails"}


def _compare(cfg, inst, timing):
    rec = compare_run(inst, cfg.reps, cfg.seed, threads=cfg.thread_count(), backend=cfg.backend)
    timing.update(rec.timing_ms)
    d = rec.to_dict()
    for key in ("rows", "cols", "timing_ms", "seed"):
        d.pop(key)
    exact = d.pop("mu_exact")
    d["mu_exact_string"] = None if exact is None else str(exact)
    return {"compare": ["oracle", "approximation", "sampler"]}, d


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute one command; returns ``(exit_status, document)``."""
    t_start = time.perf_counter()
    timing = {}
    try:
        cfg.validate()
        doc = {"schema_version": SCHEMA_VERSION, "command": cfg.command}
        if cfg.command == "gen":
            spec = GeneratorSpec(cfg.m, cfg.r_max, cfg.cap_exponent, cfg.seed)
            inst = generate_instance(spec)
            method = {"generator": "capped-unit-mass", "m": cfg.m, "r_max": cfg.r_max,
                      "c_cap_exponent": cfg.cap_exponent}
            results = {"rows": list(inst.rows), "cols": list(inst.cols)}
        elif cfg.command == "validate":
            inst, results = _validate_doc(cfg)
            method = {"check": "gale-ryser"}
        else:
            inst = parse_instance_file(cfg.instance_path)
            handler = {"estimate": _estimate, "exact": _exact, "approx": _approx,
                       "compare": _compare}[cfg.command]
            method, results = handler(cfg, inst, timing)
        timing["total"] = 1e3 * (time.perf_counter() - t_start)
        doc.update({"instance": inst.to_dict() if inst is not None else None,
                    "method": method, "results": results, "timing_ms": timing,
                    "seed": cfg.seed})
        return 0, _clean(doc)
    except BctError as exc:
        return 1, {"error": exc.code, "message": str(exc)}
    except (ValueError, RuntimeError) as exc:
        return 1, {"error": type(exc).__name__, "message": str(exc)}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _threads(text):
    if text == "auto":
        return text
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected an integer or 'auto'") from None
    if value < 1:
        raise argparse.ArgumentTypeError("threads must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bct", description="Count 0-1 tables with fixed row and column sums.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("instance", nargs="?", help='JSON file {"rows": [...], "cols": [...]}')
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--seed", type=int, default=None, help="defaults to $BCT_SEED, else 0")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--plan", choices=PLANS, default="fixed")
    p.add_argument("--threads", type=_threads, default=1)
    p.add_argument("--pilot", type=int, default=DEFAULT_PILOT)
    p.add_argument("--backend", choices=_backend.BACKENDS, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--m", type=int, default=10, help="gen: number of rows")
    p.add_argument("--r-max", type=int, default=3, help="gen: largest row sum")
    p.add_argument("--cap-exponent", type=float, default=0.5,
                   help="gen: column sums capped at ceil(d**x)")
    return p


def config_from_args(argv=None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    a = build_parser().parse_args(argv)
    seed = a.seed
    if seed is None:
        raw = environ.get("BCT_SEED")
        try:
            seed = int(raw) if raw not in (None, "") else 0
        except ValueError:
            raise UsageError(f"BCT_SEED must be an integer, got {raw!r}") from None
    return RunConfig(command=a.command, instance_path=a.instance, reps=a.reps, seed=seed,
                     epsilon=a.epsilon, delta=a.delta, plan=a.plan, threads=a.threads,
                     out_path=a.out, pilot=a.pilot, backend=a.backend, m=a.m,
                     r_max=a.r_max, cap_exponent=a.cap_exponent)


def load_schema() -> dict:
    """The JSON schema every output document conforms to."""
    text = resources.files("bctables").joinpath("schema/output.schema.json").read_text("utf-8")
    return json.loads(text)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False)


def main(argv=None) -> int:
    out_path = None
    try:
        cfg = config_from_args(argv)
        out_path = cfg.out_path
        status, doc = run(cfg)
    except UsageError as exc:
        status, doc = 2, {"error": exc.code, "message": str(exc)}
    text = dumps(doc) + "\n"
    if out_path:
        try:
            Path(out_path).write_text(text, encoding="utf-8")
        except OSError as exc:
            sys.stderr.write(f"cannot write {out_path}: {exc}\n")
            sys.stdout.write(text)
            return status or 1
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
