"""``levyx`` command line: run a task from a JSON config and write a CSV.

Exit codes: 0 success, 2 configuration error, 3 numerical error (details on
standard error).  Every CSV starts with ``#`` provenance lines; the
timestamp line is omitted with ``--no-timestamp`` so that identical inputs
give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import analytics, monte_carlo, pricer
from .char_engine import DEFAULT_Q, CharApprox
from .errors import LevyxError
from .expansion import ExpansionScheme, expand
from .model import GaussianJumpFamily, NIGSymbolFamily
from .models import model_from_dict

TASKS = ("density", "price", "smile", "survival", "yields", "table-density",
         "table-yields", "rate-study", "mc-check")
DEFAULT_OUTPUT = {"table-yields": "yields.csv", "table-density": "density_table.csv"}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def schema():
    return json.loads(resources.files("levyx").joinpath("config.schema.json").read_text())


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e


def _validate(doc, branch, what):
    sch = schema()
    sub = dict(sch["oneOf"][branch], **{"$defs": sch["$defs"]})
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(sub).iter_errors(doc))
    if err is not None:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"invalid {what} at {where}: {err.message}")


def load_config(source, base=None):
    """Validated run document (a bare model document is wrapped as ``{"model": ...}``)."""
    doc = _read_json(source) if isinstance(source, (str, Path)) else dict(source)
    base = Path(source).parent if isinstance(source, (str, Path)) else Path(base or ".")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "kind" in doc:
        _validate(doc, 0, "model document")
        doc = {"model": doc}
    else:
        _validate(doc, 1, "run config")
    doc = dict(doc)
    if isinstance(doc["model"], str):
        path = Path(doc["model"])
        doc["model"] = _read_json(path if path.is_absolute() else base / path)
        _validate(doc["model"], 0, "model document")
    return doc


def model_hash(model_doc):
    canon = json.dumps(model_doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


class Run:
    """Resolved settings for one task."""

    def __init__(self, doc, task, args):
        self.doc, self.task = doc, task
        try:
            self.model = model_from_dict(doc["model"])
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e)) from e
        sch = dict(doc.get("scheme", {}))
        grid = dict(doc.get("grid", {}))
        mc = dict(doc.get("mc", {}))
        if args.orders is not None:
            sch["order"] = args.orders
        for key in ("tau", "x", "payoff"):
            if getattr(args, key) is not None:
                grid[key] = getattr(args, key)
        if args.taus is not None:
            grid["taus"] = args.taus
        if args.K is not None:
            grid["strikes"] = args.K
        for key in ("seed", "paths"):
            if getattr(args, key) is not None:
                mc[key] = getattr(args, key)
        self.N = int(sch.get("order", 4 if task == "table-density" else 2))
        if not 0 <= self.N <= 6:
            raise ConfigError("order must be in 0..6")
        center = sch.get("center", "spot")
        self.scheme = ExpansionScheme(
            kind=sch.get("scheme", "taylor"), center=None if center == "spot" else float(center),
            order=self.N, weight_std=float(sch.get("weight_std", 1.0)))
        self.ordering = sch.get("ordering", "psi_outer")
        self.Q = int(doc.get("quadrature", {}).get("Q", DEFAULT_Q))
        self.t = float(grid.get("t", 0.0))
        self.x = float(grid.get("x", 0.0))
        self.grid = grid
        self.mc = monte_carlo.SimConfig(**{k: v for k, v in mc.items()})

    def char(self, N=None):
        series = expand(self.model, replace(self.scheme, order=self.N if N is None else N), self.x, self.t)
        return CharApprox(series, self.N if N is None else N, self.Q, self.ordering)

    def tau(self, default=1.0):
        return float(self.grid.get("tau", default))

    def taus(self, default):
        return [float(v) for v in self.grid.get("taus", default)]

    def strikes(self, default):
        return [float(v) for v in self.grid.get("strikes", default)]

    def payoff(self, default="put"):
        return self.grid.get("payoff", default)

    def y(self, lo=-3.0, hi=1.5, n=451):
        g = self.grid
        return np.linspace(float(g.get("y_min", lo)), float(g.get("y_max", hi)), int(g.get("n_y", n)))

    def provenance(self, timestamp=True):
        lines = [
            f"levyx {__version__}",
            f"task={self.task}",
            f"model={self.model.name} hash={model_hash(self.doc['model'])}",
            f"scheme={self.scheme.kind} center={'spot' if self.scheme.center is None else self.scheme.center}"
            f" weight_std={self.scheme.weight_std} ordering={self.ordering}",
            f"N={self.N}",
            f"quadrature Q={self.Q} inversion_rtol=1e-9",
            f"seed={self.mc.seed}",
        ]
        if timestamp:
            lines.append("timestamp=" + datetime.now(timezone.utc).isoformat(timespec="seconds"))
        return lines


# ---------------------------------------------------------------------------
# tasks: each returns (header, rows)
# ---------------------------------------------------------------------------

def _orders(prefix, N):
    return [f"{prefix}{n}" for n in range(N + 1)]


def task_density(run):
    tau = run.tau()
    d = pricer.density(run.char(), run.t, run.x, run.t + tau, run.y())
    cum = np.cumsum(d.per_order, axis=0)
    return ["y"] + _orders("p", run.N), [[y, *cum[:, i]] for i, y in enumerate(d.y)]


def task_price(run):
    tau, kind = run.tau(), run.payoff()
    ch = run.char()
    rows = []
    for K in run.strikes([math.exp(run.x)]):
        res = pricer.defaultable_price(ch, pricer.payoff_transform(kind, K), run.t, run.x, run.t + tau)
        rows.append([K, *res.cumulative])
    return ["K"] + _orders("u", run.N), rows


def task_smile(run):
    tau, kind = run.tau(0.5), run.payoff()
    strikes = run.strikes(np.exp(run.x + np.linspace(-0.4, 0.4, 11)))
    sm = pricer.smile(run.char(), strikes, run.t, run.x, run.t + tau, kind)
    rows = [[K, sm.k[i], *sm.iv[:, i]] for i, K in enumerate(strikes)]
    return ["K", "k"] + _orders("iv", run.N), rows


def task_survival(run):
    ch = run.char()
    rows = []
    for tau in run.taus(range(1, 11)):
        rows.append([tau, *pricer.survival(ch, run.t, run.x, run.t + tau).cumulative])
    return ["tau"] + _orders("S", run.N), rows


def task_yields(run):
    ch = run.char()
    rows = []
    for tau in run.taus(range(1, 11)):
        cum = pricer.survival(ch, run.t, run.x, run.t + tau).cumulative
        rows.append([tau, *(-np.log(cum) / tau)])
    return ["tau"] + _orders("Y", run.N), rows


def task_table_yields(run):
    if run.model.name != "jdcev":
        raise ConfigError("table-yields needs a jdcev model")
    p = analytics.JDCEVParams(**run.model.params)
    ch = run.char()
    rows = []
    for tau in run.taus(range(1, 11)):
        Y = -math.log(analytics.jdcev_exact(p, run.t, run.x, run.t + tau)) / tau
        cum = pricer.survival(ch, run.t, run.x, run.t + tau).cumulative
        rows.append([tau, Y, *(Y + np.log(cum) / tau)])
    return ["tau", "Y"] + [f"Y-Y{n}" for n in range(run.N + 1)], rows


def task_table_density(run):
    if run.N < 1:
        raise ConfigError("table-density needs order >= 1")
    ch, y = run.char(), run.y()
    rows = []
    for tau in run.taus([1.0, 3.0, 5.0]):
        d = pricer.density(ch, run.t, run.x, run.t + tau, y)
        rows.append([tau, *np.max(np.abs(d.per_order[1:]), axis=1)])
    return ["tau"] + [f"sup_n{n}" for n in range(1, run.N + 1)], rows


def task_rate_study(run, ref_order=5):
    """Slopes of the error of ``u^(n)`` against ``u^(ref_order)`` for ATM payoffs, n < ref_order."""
    kind = run.payoff("digital")
    K = run.strikes([math.exp(run.x)])[0]
    taus = run.taus(2.0 ** -np.arange(4, 9))
    ch = CharApprox(expand(run.model, replace(run.scheme, order=ref_order), run.x, run.t), ref_order,
                    run.Q, run.ordering)
    pay = pricer.payoff_transform(kind, K)
    cum = {tau: pricer.defaultable_price(ch, pay, run.t, run.x, run.t + tau).cumulative for tau in taus}
    rows = []
    for n in range(min(run.N, ref_order - 1) + 1):
        r = analytics.rate_study(lambda s: cum[s][n], lambda s: cum[s][ref_order], taus)
        rows.append([n, r.slope, r.stderr])
    return ["N", "slope", "stderr"], rows


def task_mc_check(run):
    tau, kind = run.tau(0.5), run.payoff("call")
    strikes = run.strikes(np.exp(run.x + np.linspace(-0.4, 0.4, 11)))
    jumps = run.model.jumps
    sim = monte_carlo.simulate_nig_frozen if isinstance(jumps, NIGSymbolFamily) else monte_carlo.simulate_price
    if not isinstance(jumps, (NIGSymbolFamily, GaussianJumpFamily, type(None))):
        raise ConfigError("mc-check supports Gaussian-jump and NIG models")
    ests = sim(run.model, [pricer.payoff_transform(kind, K) for K in strikes], run.t, run.x, run.t + tau, run.mc)
    sm = pricer.smile(run.char(), strikes, run.t, run.x, run.t + tau, kind)
    fwd = math.exp(run.x)
    rows = []
    for i, (K, e) in enumerate(zip(strikes, ests)):
        lo, mid, hi = monte_carlo.iv_band(e, fwd, K, tau, kind)
        uN = sm.prices[run.N, i]
        rows.append([K, e.mean, e.ci95[0], e.ci95[1], uN, lo, mid, hi, sm.iv[run.N, i],
                     int(e.ci95[0] <= uN <= e.ci95[1])])
    head = ["K", "mc_mean", "mc_lo", "mc_hi", f"expansion_order{run.N}",
            "iv_lo", "iv_mc", "iv_hi", f"iv_order{run.N}", "inside"]
    return head, rows


HANDLERS = {
    "density": task_density, "price": task_price, "smile": task_smile, "survival": task_survival,
    "yields": task_yields, "table-density": task_table_density, "table-yields": task_table_yields,
    "rate-study": task_rate_study, "mc-check": task_mc_check,
}


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def render(run, header, rows, timestamp=True):
    buf = io.StringIO()
    for line in run.provenance(timestamp):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="levyx", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"levyx {__version__}")
    sub = ap.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", required=True, help="run or model JSON document")
        p.add_argument("--orders", type=int, help="expansion order N")
        p.add_argument("--payoff", choices=("put", "call", "digital"))
        p.add_argument("--K", type=float, nargs="+", help="strike(s)")
        p.add_argument("--tau", type=float, help="time to maturity")
        p.add_argument("--taus", type=float, nargs="+", help="maturities")
        p.add_argument("--x", type=float, help="log-spot")
        p.add_argument("--seed", type=int)
        p.add_argument("--paths", type=int)
        p.add_argument("-o", "--output", help="CSV path ('-' for standard output)")
        p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        doc = load_config(args.config)
        if doc.get("task", args.task) != args.task:
            raise ConfigError(f"config is for task {doc['task']!r}, not {args.task!r}")
        run = Run(doc, args.task, args)
    except (ConfigError, ValueError, TypeError) as e:
        print(f"levyx: config error: {e}", file=sys.stderr)
        return 2
    try:
        header, rows = HANDLERS[args.task](run)
    except ConfigError as e:
        print(f"levyx: config error: {e}", file=sys.stderr)
        return 2
    except (LevyxError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"levyx: numerical error ({type(e).__name__}): {e}", file=sys.stderr)
        return 3
    text = render(run, header, rows, timestamp=not args.no_timestamp)
    out = args.output or doc.get("output") or DEFAULT_OUTPUT.get(args.task, f"{args.task}.csv")
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
